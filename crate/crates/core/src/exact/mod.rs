//! Exact sphere integrals and the combinatorics behind them.

pub mod combinatorics;
pub mod moments;
pub mod tensor;

pub use combinatorics::{binomial, double_factorial, factorial, rational_to_f64};
pub use moments::*;
pub use tensor::{BiSymmetricTensor, SymmetricTensor};
