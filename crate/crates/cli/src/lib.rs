//! Command-line front end: argument parsing, dispatch, and reports.

pub mod dispatch;
pub mod region;
pub mod report;
pub mod spec;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sphereonb::uniformity::TrialMode;
use sphereonb::FieldTag;

use report::{emit_report, RunManifest};
use spec::{
    Command, CovarianceParams, ExperimentSpec, Format, MomentsParams, PartitionParams, RadonParams, SpectrumParams,
    TestfnParams, TrialParams, UniformityParams,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },
    #[error(transparent)]
    Core(#[from] sphereonb::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> Self {
        Self::Invalid {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "sphereonb", version, about = "Experiments with random orthonormal bases on real and complex spheres")]
pub struct Cli {
    /// Seed for every random draw; required by stochastic subcommands.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write the report here instead of standard output.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for Monte Carlo loops.
    #[arg(long, global = true, env = "SPHEREONB_THREADS")]
    pub threads: Option<usize>,
    /// Run the experiment described by a JSON spec (or a previous manifest).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Sub>,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Exact sphere moments.
    Moments {
        /// alpha_{L,D}, the average of x_1^L on S(R^D).
        #[arg(long, num_args = 2, value_names = ["L", "D"], action = clap::ArgAction::Append)]
        alpha: Vec<u64>,
        /// beta_{L,D}, the average of |z_1|^{2L} on S(C^D).
        #[arg(long, num_args = 2, value_names = ["L", "D"], action = clap::ArgAction::Append)]
        beta: Vec<u64>,
        /// Exponent vector such as 2,0,4; its length is the dimension.
        #[arg(long)]
        monomial: Vec<String>,
        #[arg(long, default_value = "real")]
        field: FieldTag,
        /// Surface area of S^{N-1} in R^N.
        #[arg(long)]
        surface_area: Vec<u64>,
    },
    /// Exact eigenvalues of the Radon operator.
    Spectrum {
        #[arg(long, default_value = "real")]
        field: FieldTag,
        #[arg(long)]
        dim: u64,
        #[arg(long, default_value_t = 10)]
        max_degree: u32,
    },
    /// Monte Carlo check of one eigenvalue on a random harmonic.
    RadonVerify {
        #[arg(long, default_value = "real")]
        field: FieldTag,
        #[arg(long)]
        dim: usize,
        /// Degree `l` (real) or bidegree `p,q` (complex).
        #[arg(long)]
        degree: String,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 3)]
        points: usize,
    },
    /// Covariance of a test function at two vectors of a random basis.
    Covariance {
        #[arg(long, default_value = "real")]
        field: FieldTag,
        #[arg(long)]
        dim: usize,
        /// Polynomial in x1..xd (real) or z1..zd, zc1..zcd (complex).
        #[arg(long)]
        function: String,
        #[arg(long, default_value_t = 10_000)]
        bases: u64,
        #[arg(long, default_value = "0,1")]
        pair: String,
    },
    /// Fraction of basis vectors inside regions.
    Uniformity {
        #[command(flatten)]
        trial: TrialArgs,
        /// cap:measure=U, cap:height=T, ccap:level=C, band:low=A,high=B,
        /// halfspace, sphere; prefix with not: for the complement.
        #[arg(long, required = true)]
        region: Vec<String>,
    },
    /// Simultaneous uniformity over equal-measure latitude bands.
    Partition {
        #[command(flatten)]
        trial: TrialArgs,
        #[arg(long)]
        bands: usize,
    },
    /// Basis averages of a polynomial test function.
    Testfn {
        #[command(flatten)]
        trial: TrialArgs,
        #[arg(long)]
        function: String,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    /// Random basis, fixed region.
    RandomBasis,
    /// Standard basis, randomly rotated region.
    RandomRotation,
}

#[derive(Debug, Args)]
pub struct TrialArgs {
    #[arg(long, default_value = "real")]
    pub field: FieldTag,
    #[arg(long)]
    pub dim: usize,
    #[arg(long)]
    pub delta: f64,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 200)]
    pub trials: u64,
    #[arg(long, value_enum, default_value = "random-basis")]
    pub mode: ModeArg,
}

impl From<TrialArgs> for TrialParams {
    fn from(a: TrialArgs) -> Self {
        Self {
            field: a.field,
            dim: a.dim,
            delta: a.delta,
            epsilon: a.epsilon,
            trials: a.trials,
            mode: match a.mode {
                ModeArg::RandomBasis => TrialMode::RandomBasisFixedRegion,
                ModeArg::RandomRotation => TrialMode::FixedBasisRandomRotation,
            },
        }
    }
}

fn pairs(flat: Vec<u64>) -> Vec<(u64, u64)> {
    flat.chunks_exact(2).map(|c| (c[0], c[1])).collect()
}

fn parse_list<T: std::str::FromStr>(field: &str, s: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(|t| t.trim().parse().map_err(|_| CliError::invalid(field, format!("cannot parse `{s}`"))))
        .collect()
}

fn parse_pair<T: std::str::FromStr + Copy>(field: &str, s: &str) -> Result<(T, T), CliError> {
    match parse_list::<T>(field, s)?.as_slice() {
        &[a, b] => Ok((a, b)),
        _ => Err(CliError::invalid(field, format!("expected two comma-separated values, got `{s}`"))),
    }
}

impl Sub {
    fn into_command(self) -> Result<Command, CliError> {
        Ok(match self {
            Sub::Moments {
                alpha,
                beta,
                monomial,
                field,
                surface_area,
            } => Command::Moments(MomentsParams {
                alpha: pairs(alpha),
                beta: pairs(beta),
                monomial: monomial.iter().map(|m| parse_list("monomial", m)).collect::<Result<_, _>>()?,
                field,
                surface_area,
            }),
            Sub::Spectrum { field, dim, max_degree } => Command::Spectrum(SpectrumParams { field, dim, max_degree }),
            Sub::RadonVerify {
                field,
                dim,
                degree,
                samples,
                points,
            } => {
                let label = match field {
                    FieldTag::Real => (degree.trim().parse().map_err(|_| CliError::invalid("degree", format!("`{degree}` is not a degree")))?, 0),
                    FieldTag::Complex => parse_pair("degree", &degree)?,
                };
                Command::RadonVerify(RadonParams {
                    field,
                    dim,
                    label,
                    samples,
                    points,
                })
            }
            Sub::Covariance {
                field,
                dim,
                function,
                bases,
                pair,
            } => Command::Covariance(CovarianceParams {
                field,
                dim,
                function,
                bases,
                pair: parse_pair("pair", &pair)?,
            }),
            Sub::Uniformity { trial, region } => Command::Uniformity(UniformityParams {
                trial: trial.into(),
                regions: region,
            }),
            Sub::Partition { trial, bands } => Command::Partition(PartitionParams {
                trial: trial.into(),
                bands,
            }),
            Sub::Testfn { trial, function } => Command::Testfn(TestfnParams {
                trial: trial.into(),
                function,
            }),
        })
    }
}

fn load_config(path: &PathBuf) -> Result<ExperimentSpec, CliError> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    // accept a previous run manifest as well as a bare spec
    let spec = match value.get("spec") {
        Some(inner) if value.get("tool_version").is_some() => inner.clone(),
        _ => value,
    };
    Ok(serde_json::from_value(spec)?)
}

/// Resolves the command line into a spec; flags given on the command line
/// override those stored in `--config`.
pub fn build_spec(cli: Cli) -> Result<(ExperimentSpec, Option<usize>), CliError> {
    let mut spec = match (cli.config.as_ref(), cli.command) {
        (Some(_), Some(_)) => return Err(CliError::Usage("--config cannot be combined with a subcommand".into())),
        (None, None) => return Err(CliError::Usage("a subcommand or --config is required (see --help)".into())),
        (Some(path), None) => load_config(path)?,
        (None, Some(sub)) => ExperimentSpec {
            command: sub.into_command()?,
            seed: None,
            output_path: None,
            format: Format::Json,
        },
    };
    if cli.seed.is_some() {
        spec.seed = cli.seed;
    }
    if let Some(o) = cli.output {
        spec.output_path = Some(o.to_string_lossy().into_owned());
    }
    if let Some(f) = cli.format {
        spec.format = f;
    }
    if spec.command.is_stochastic() && spec.seed.is_none() {
        return Err(CliError::invalid("seed", format!("`{}` draws random numbers; pass --seed", spec.command.name())));
    }
    if cli.threads == Some(0) {
        return Err(CliError::invalid("threads", "must be positive"));
    }
    Ok((spec, cli.threads))
}

/// Runs the spec on a pool of `threads` workers (default: rayon's choice).
pub fn execute(spec: ExperimentSpec, threads: Option<usize>) -> Result<RunManifest, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Usage(e.to_string()))?;
    pool.install(|| dispatch::run_spec(spec))
}

fn write_manifest(manifest: &RunManifest) -> Result<(), CliError> {
    match &manifest.spec.output_path {
        Some(path) => {
            let file = std::fs::File::create(path)?;
            emit_report(manifest, manifest.spec.format, std::io::BufWriter::new(file))
        }
        None => emit_report(manifest, manifest.spec.format, std::io::stdout().lock()),
    }
}

/// Full command-line entry point; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = build_spec(cli).and_then(|(spec, threads)| execute(spec, threads));
    let manifest = match outcome {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    if let Err(e) = write_manifest(&manifest) {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    for c in manifest.checks.iter().filter(|c| !c.pass) {
        eprintln!("check failed: {} (observed {}, bound {})", c.name, c.observed, c.bound);
    }
    if manifest.all_passed() {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}
