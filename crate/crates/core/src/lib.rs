pub mod covariance;
pub mod error;
pub mod exact;
pub mod field;
pub mod linalg;
pub mod polynomial;
pub mod radon;
pub mod rng;
pub mod sphere;
pub mod stats;
pub mod uniformity;

pub use error::{Error, Result};
pub use field::{FieldTag, Scalar};
pub use rng::RngStream;
