//! Serializable description of one run.

use serde::{Deserialize, Serialize};
use sphereonb::uniformity::TrialMode;
use sphereonb::FieldTag;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    #[serde(flatten)]
    pub command: Command,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_path: Option<String>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "subcommand", content = "parameters", rename_all = "kebab-case")]
pub enum Command {
    Moments(MomentsParams),
    Spectrum(SpectrumParams),
    RadonVerify(RadonParams),
    Covariance(CovarianceParams),
    Uniformity(UniformityParams),
    Partition(PartitionParams),
    Testfn(TestfnParams),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Moments(_) => "moments",
            Self::Spectrum(_) => "spectrum",
            Self::RadonVerify(_) => "radon-verify",
            Self::Covariance(_) => "covariance",
            Self::Uniformity(_) => "uniformity",
            Self::Partition(_) => "partition",
            Self::Testfn(_) => "testfn",
        }
    }

    /// Whether the run draws random numbers and so needs a seed.
    pub fn is_stochastic(&self) -> bool {
        !matches!(self, Self::Moments(_) | Self::Spectrum(_))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MomentsParams {
    /// `(l, d)` pairs.
    #[serde(default)]
    pub alpha: Vec<(u64, u64)>,
    #[serde(default)]
    pub beta: Vec<(u64, u64)>,
    /// Exponent vectors; the field decides which closed form applies.
    #[serde(default)]
    pub monomial: Vec<Vec<u32>>,
    #[serde(default)]
    pub field: FieldTag,
    #[serde(default)]
    pub surface_area: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumParams {
    pub field: FieldTag,
    pub dim: u64,
    pub max_degree: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadonParams {
    pub field: FieldTag,
    pub dim: usize,
    /// `(l, 0)` for real fields, `(p, q)` for complex.
    pub label: (u32, u32),
    pub samples: u64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceParams {
    pub field: FieldTag,
    pub dim: usize,
    pub function: String,
    pub bases: u64,
    pub pair: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialParams {
    pub field: FieldTag,
    pub dim: usize,
    pub delta: f64,
    pub epsilon: f64,
    pub trials: u64,
    #[serde(default)]
    pub mode: TrialMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformityParams {
    #[serde(flatten)]
    pub trial: TrialParams,
    pub regions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionParams {
    #[serde(flatten)]
    pub trial: TrialParams,
    pub bands: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestfnParams {
    #[serde(flatten)]
    pub trial: TrialParams,
    pub function: String,
}
