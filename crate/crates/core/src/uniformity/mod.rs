//! Monte Carlo experiments on how evenly a random orthonormal basis spreads
//! over fixed (or randomly rotated) regions of the sphere.

pub mod region;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use region::{
    complex_cap_measure, equal_measure_bands, estimate_region_measure, real_cap_height, real_cap_measure, Partition,
    TestRegion,
};

use crate::error::{Error, Result};
use crate::field::{FieldTag, Scalar};
use crate::linalg::HouseholderQ;
use crate::polynomial::SpherePolynomial;
use crate::rng::RngStream;
use crate::sphere::{haar_random_factor, OrthonormalBasis};
use crate::stats::{wilson_interval, Estimate, Moments, Z_95};

/// How randomness enters a trial. The two are equivalent in law:
/// `#(B ∩ R(A)) = #(R^{-1}(B) ∩ A)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialMode {
    /// Haar basis `B`, region fixed.
    #[default]
    RandomBasisFixedRegion,
    /// Standard basis fixed, region rotated by a Haar `R`.
    FixedBasisRandomRotation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub dim: usize,
    pub field: FieldTag,
    pub delta: f64,
    pub epsilon: f64,
    pub n_trials: u64,
    #[serde(default)]
    pub mode: TrialMode,
    pub seed: u64,
}

/// Which sufficient condition on `d` a run is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    /// Single region: `d >= delta^-2 eps^-1`.
    Region,
    /// Partition into `m` cells: `d >= m delta^-2 eps^-1`.
    Partition(usize),
    /// Test function: `d >= 2 delta^-2 eps^-1`.
    TestFunction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub kind: Hypothesis,
    /// Smallest integer `d` meeting the dimension condition.
    pub required_dim: u64,
    pub dim_at_least_4: bool,
    pub met: bool,
}

impl TrialConfig {
    pub fn new(dim: usize, field: FieldTag, delta: f64, epsilon: f64, n_trials: u64, seed: u64) -> Self {
        Self {
            dim,
            field,
            delta,
            epsilon,
            n_trials,
            mode: TrialMode::default(),
            seed,
        }
    }

    pub fn with_mode(mut self, mode: TrialMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &'static str, reason: String| Err(Error::InvalidParameter { field, reason });
        if self.dim == 0 {
            return bad("dim", "must be positive".into());
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return bad("delta", format!("must be positive, got {}", self.delta));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return bad("epsilon", format!("must be positive, got {}", self.epsilon));
        }
        if self.n_trials == 0 {
            return bad("n_trials", "must be positive".into());
        }
        Ok(())
    }

    pub fn hypothesis(&self, kind: Hypothesis) -> HypothesisCheck {
        let factor = match kind {
            Hypothesis::Region => 1.0,
            Hypothesis::Partition(m) => m as f64,
            Hypothesis::TestFunction => 2.0,
        };
        // round away representation noise such as 1/0.1^2 = 100.00000000000001
        let raw = factor / (self.delta * self.delta * self.epsilon);
        let required_dim = (raw - 1e-9 * raw.max(1.0)).ceil().max(0.0) as u64;
        let dim_at_least_4 = self.dim >= 4;
        HypothesisCheck {
            kind,
            required_dim,
            dim_at_least_4,
            met: dim_at_least_4 && self.dim as u64 >= required_dim,
        }
    }
}

/// `min(1, 2 variance_ratio / (delta^2 d))`: Chebyshev's inequality applied
/// to a basis average whose variance is at most `2 Var / d`.
/// `variance_ratio` is `Var / threshold_scale^2`; it is 1 when the
/// threshold is measured in standard deviations and `u(1-u)` for an
/// indicator compared in absolute units.
pub fn chebyshev_failure_bound(delta: f64, d: usize, variance_ratio: f64) -> f64 {
    (2.0 * variance_ratio / (delta * delta * d as f64)).min(1.0)
}

/// Fraction `count / dim` of basis vectors inside a region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fraction {
    pub count: u64,
    pub dim: u64,
}

impl Fraction {
    pub fn value(&self) -> f64 {
        self.count as f64 / self.dim as f64
    }
}

impl std::fmt::Display for Fraction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.count, self.dim)
    }
}

/// `#(B ∩ A) / d`.
pub fn empirical_fraction<S: Scalar>(basis: &OrthonormalBasis<S>, region: &TestRegion<S>) -> Fraction {
    let count = basis.vectors().filter(|b| region.contains(b)).count();
    Fraction {
        count: count as u64,
        dim: basis.dim() as u64,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    /// `u(A)` (or `E_u phi` for test functions).
    pub target: f64,
    pub failure_count: u64,
    pub failure_rate: f64,
    /// Mean over trials of the basis fraction (or basis average).
    pub mean_fraction: Estimate,
    pub chebyshev_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub dim: usize,
    pub field: FieldTag,
    pub mode: TrialMode,
    pub delta: f64,
    pub epsilon: f64,
    /// Deviation beyond which a trial fails: `delta`, or
    /// `delta * sqrt(Var_u phi)` for test functions.
    pub threshold: f64,
    pub n_trials: u64,
    pub failure_count: u64,
    pub failure_rate: f64,
    pub wilson_95: (f64, f64),
    /// Chebyshev bound on the failure probability (union bound over cells).
    pub chebyshev_bound: f64,
    pub hypothesis: HypothesisCheck,
    pub per_cell: Vec<CellStats>,
}

impl TrialReport {
    /// Upper Wilson limit at most `epsilon`.
    pub fn within_epsilon(&self) -> bool {
        self.wilson_95.1 <= self.epsilon
    }

    /// Observed rate at most the Chebyshev bound plus `k` binomial standard
    /// errors evaluated at the bound.
    pub fn within_chebyshev(&self, k: f64) -> bool {
        let p = self.chebyshev_bound;
        let se = (p * (1.0 - p) / self.n_trials as f64).sqrt();
        self.failure_rate <= p + k * se
    }

    fn assemble(
        cfg: &TrialConfig,
        threshold: f64,
        hypothesis: Hypothesis,
        cells: Vec<CellStats>,
        failure_count: u64,
        chebyshev_bound: f64,
    ) -> Self {
        let n = cfg.n_trials;
        Self {
            dim: cfg.dim,
            field: cfg.field,
            mode: cfg.mode,
            delta: cfg.delta,
            epsilon: cfg.epsilon,
            threshold,
            n_trials: n,
            failure_count,
            failure_rate: failure_count as f64 / n as f64,
            wilson_95: wilson_interval(failure_count, n, Z_95),
            chebyshev_bound: chebyshev_bound.min(1.0),
            hypothesis: cfg.hypothesis(hypothesis),
            per_cell: cells,
        }
    }
}

fn check_field<S: Scalar>(cfg: &TrialConfig) -> Result<()> {
    if cfg.field != S::FIELD {
        return Err(Error::InvalidParameter {
            field: "field",
            reason: format!("configuration is {} but the regions are {}", cfg.field, S::FIELD),
        });
    }
    Ok(())
}

fn check_region_dims<S: Scalar>(cfg: &TrialConfig, regions: &[TestRegion<S>]) -> Result<()> {
    for r in regions {
        if r.dim() != cfg.dim {
            return Err(Error::DimensionMismatch {
                expected: cfg.dim,
                actual: r.dim(),
            });
        }
    }
    Ok(())
}

/// Haar unitary of trial `k`.
fn trial_rotation<S: Scalar>(cfg: &TrialConfig, k: u64) -> Result<HouseholderQ<S>> {
    let mut rng = RngStream::from_seed(cfg.seed).trial(k).rng();
    haar_random_factor(cfg.dim, &mut rng)
}

/// Per trial, the number of basis vectors in each region.
fn region_counts<S: Scalar>(cfg: &TrialConfig, regions: &[TestRegion<S>]) -> Result<Vec<Vec<u64>>> {
    let axis = shared_axis(regions);
    (0..cfg.n_trials)
        .into_par_iter()
        .map(|k| {
            let q = trial_rotation::<S>(cfg, k)?;
            Ok(match axis {
                Some(a) => axial_counts(cfg.mode, &q, a, regions),
                None => general_counts(cfg.mode, &q, regions),
            })
        })
        .collect()
}

/// The common axis when every region is axial around it (or the whole
/// sphere), so membership needs only the `d` projections onto it.
fn shared_axis<S: Scalar>(regions: &[TestRegion<S>]) -> Option<&[S]> {
    if !regions.iter().all(TestRegion::is_axial) {
        return None;
    }
    let mut axes = regions.iter().filter_map(TestRegion::axis);
    let first = axes.next().unwrap_or(&[]);
    axes.all(|a| a == first).then_some(first)
}

fn axial_counts<S: Scalar>(mode: TrialMode, q: &HouseholderQ<S>, axis: &[S], regions: &[TestRegion<S>]) -> Vec<u64> {
    let d = q.dim();
    // s_j = <a, b_j> for the d basis vectors b_j under test
    let s: Vec<S> = if axis.is_empty() {
        vec![S::zero(); d]
    } else {
        let mut v = axis.to_vec();
        match mode {
            // b_j = Q e_j: <a, Q e_j> = conj((Q^H a)_j)
            TrialMode::RandomBasisFixedRegion => q.apply_adjoint(&mut v),
            // e_j in R(A) iff R^H e_j in A: <a, R^H e_j> = conj((R a)_j)
            TrialMode::FixedBasisRandomRotation => q.apply(&mut v),
        }
        v.into_iter().map(Scalar::conj).collect()
    };
    regions
        .iter()
        .map(|r| s.iter().filter(|&&sj| r.contains_projection(sj)).count() as u64)
        .collect()
}

fn general_counts<S: Scalar>(mode: TrialMode, q: &HouseholderQ<S>, regions: &[TestRegion<S>]) -> Vec<u64> {
    let m = q.to_matrix();
    let points: Vec<Vec<S>> = match mode {
        TrialMode::RandomBasisFixedRegion => m.into_columns(),
        TrialMode::FixedBasisRandomRotation => m.adjoint().into_columns(),
    };
    regions
        .iter()
        .map(|r| points.iter().filter(|p| r.contains(p)).count() as u64)
        .collect()
}

fn cell_stats(cfg: &TrialConfig, target: f64, values: impl Iterator<Item = f64>, threshold: f64, bound: f64) -> CellStats {
    let mut m = Moments::new();
    let mut failures = 0;
    for v in values {
        m.push(v);
        if (v - target).abs() > threshold {
            failures += 1;
        }
    }
    CellStats {
        target,
        failure_count: failures,
        failure_rate: failures as f64 / cfg.n_trials as f64,
        mean_fraction: m.estimate(),
        chebyshev_bound: bound,
    }
}

/// One report per region, all computed from the same sequence of bases.
pub fn run_region_trials<S: Scalar>(cfg: &TrialConfig, regions: &[TestRegion<S>]) -> Result<Vec<TrialReport>> {
    cfg.validate()?;
    check_field::<S>(cfg)?;
    check_region_dims(cfg, regions)?;
    let measures = regions.iter().map(TestRegion::measure).collect::<Result<Vec<_>>>()?;
    let counts = region_counts(cfg, regions)?;
    let d = cfg.dim as f64;
    Ok(measures
        .iter()
        .enumerate()
        .map(|(i, &u)| {
            let bound = chebyshev_failure_bound(cfg.delta, cfg.dim, u * (1.0 - u));
            let cell = cell_stats(cfg, u, counts.iter().map(|c| c[i] as f64 / d), cfg.delta, bound);
            let failures = cell.failure_count;
            TrialReport::assemble(cfg, cfg.delta, Hypothesis::Region, vec![cell], failures, bound)
        })
        .collect())
}

/// Failure iff `|#(B ∩ A)/d - u(A)| > delta`.
pub fn run_uniformity_trial<S: Scalar>(cfg: &TrialConfig, region: &TestRegion<S>) -> Result<TrialReport> {
    Ok(run_region_trials(cfg, std::slice::from_ref(region))?.remove(0))
}

/// Failure iff some cell deviates from its measure by more than `delta`.
pub fn run_partition_trial<S: Scalar>(cfg: &TrialConfig, parts: &Partition<S>) -> Result<TrialReport> {
    cfg.validate()?;
    check_field::<S>(cfg)?;
    check_region_dims(cfg, parts.regions())?;
    let counts = region_counts(cfg, parts.regions())?;
    let d = cfg.dim as f64;
    let cells: Vec<CellStats> = parts
        .measures()
        .iter()
        .enumerate()
        .map(|(i, &u)| {
            let bound = chebyshev_failure_bound(cfg.delta, cfg.dim, u * (1.0 - u));
            cell_stats(cfg, u, counts.iter().map(|c| c[i] as f64 / d), cfg.delta, bound)
        })
        .collect();
    let failures = counts
        .iter()
        .filter(|c| c.iter().zip(parts.measures()).any(|(&k, &u)| (k as f64 / d - u).abs() > cfg.delta))
        .count() as u64;
    let bound = cells.iter().map(|c| c.chebyshev_bound).sum();
    Ok(TrialReport::assemble(cfg, cfg.delta, Hypothesis::Partition(parts.len()), cells, failures, bound))
}

/// Failure iff `|d^-1 sum_j phi(b_j) - E_u phi| > delta sqrt(Var_u phi)`.
/// A test function with zero variance is rejected.
pub fn run_test_function_trial(cfg: &TrialConfig, phi: &SpherePolynomial) -> Result<TrialReport> {
    cfg.validate()?;
    if phi.field() != cfg.field {
        return Err(Error::InvalidParameter {
            field: "field",
            reason: format!("configuration is {} but the test function is {}", cfg.field, phi.field()),
        });
    }
    if phi.dim() != cfg.dim {
        return Err(Error::DimensionMismatch {
            expected: cfg.dim,
            actual: phi.dim(),
        });
    }
    let var = phi.variance();
    if var <= crate::covariance::DEGENERATE_VARIANCE * phi.max_abs_coefficient().powi(2).max(1.0) {
        return Err(Error::DegenerateVariance);
    }
    let mean = phi.sphere_average().re;
    let averages = match cfg.field {
        FieldTag::Real => basis_averages::<f64>(cfg, phi)?,
        FieldTag::Complex => basis_averages::<num_complex::Complex64>(cfg, phi)?,
    };
    let threshold = cfg.delta * var.sqrt();
    let bound = chebyshev_failure_bound(cfg.delta, cfg.dim, 1.0);
    let cell = cell_stats(cfg, mean, averages.into_iter(), threshold, bound);
    let failures = cell.failure_count;
    Ok(TrialReport::assemble(cfg, threshold, Hypothesis::TestFunction, vec![cell], failures, bound))
}

/// `d^-1 sum_j phi(b_j)` per trial. Only the coordinates in the support of
/// `phi` are extracted from each rotation.
fn basis_averages<S: Scalar>(cfg: &TrialConfig, phi: &SpherePolynomial) -> Result<Vec<f64>> {
    let support = phi.support();
    let d = cfg.dim;
    (0..cfg.n_trials)
        .into_par_iter()
        .map(|k| {
            let q = trial_rotation::<S>(cfg, k)?;
            // coords[t][j] = coordinate support[t] of the j-th vector under test
            let coords: Vec<Vec<S>> = support
                .iter()
                .map(|&i| match cfg.mode {
                    TrialMode::RandomBasisFixedRegion => q.row(i),
                    TrialMode::FixedBasisRandomRotation => {
                        let mut e = vec![S::zero(); d];
                        e[i] = S::one();
                        q.apply(&mut e);
                        e.into_iter().map(Scalar::conj).collect()
                    }
                })
                .collect();
            let total: f64 = (0..d)
                .map(|j| {
                    phi.eval_with(|i| {
                        let t = support.binary_search(&i).expect("variable in support");
                        coords[t][j].to_complex()
                    })
                    .re
                })
                .sum();
            Ok(total / d as f64)
        })
        .collect()
}
