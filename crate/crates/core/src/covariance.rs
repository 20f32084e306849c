//! Covariance of a test function evaluated at two vectors of the same random
//! orthonormal basis, exactly and by Monte Carlo.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{FieldTag, Scalar};
use crate::polynomial::{SphereFunction, SpherePolynomial};
use crate::radon::radon_eigenvalue;
use crate::rng::RngStream;
use crate::sphere::{haar_random_factor, sample_orthonormal_frame};
use crate::stats::{covariance, Estimate, Moments};

/// Exact `Var_u(phi)`.
pub fn variance_u(phi: &SpherePolynomial) -> f64 {
    phi.variance()
}

/// Minimum number of basis draws for [`cov_pair_mc`].
pub const MIN_BASES: u64 = 1000;

/// Variances below this are treated as zero.
pub const DEGENERATE_VARIANCE: f64 = 1e-14;

#[derive(Debug, Clone, Serialize)]
pub struct CovarianceReport {
    pub field: FieldTag,
    pub dim: usize,
    pub n_bases: u64,
    /// Indices of the two basis vectors compared.
    pub pair: (usize, usize),
    pub exact_variance: f64,
    /// Sample covariance of `(phi(b_i), phi(b_j))`.
    pub covariance: Estimate,
    /// Sample variance of `phi(b_i)`; its mean estimates `Var_u(phi)`.
    pub marginal_variance: f64,
    /// `Var_u(phi) / (d - 1)`.
    pub bound: f64,
    /// `|Cov| (d - 1) / Var_u(phi)`; absent for degenerate `phi`.
    pub sharpness_ratio: Option<Estimate>,
    pub degenerate: bool,
}

impl CovarianceReport {
    /// `|Cov| <= bound + k * std_error`.
    pub fn within_bound(&self, k: f64) -> bool {
        self.covariance.value.abs() <= self.bound + k * self.covariance.std_error
    }
}

/// Estimates `Cov(phi(b_i), phi(b_j))` over `n_bases` independent Haar
/// bases; draw `k` uses `stream.trial(k)`. Only the first `max(i, j) + 1`
/// basis vectors are generated, by the sequential construction.
pub fn cov_pair_mc<S: Scalar, F: SphereFunction<S>>(
    phi: &F,
    n_bases: u64,
    pair: (usize, usize),
    stream: RngStream,
) -> Result<CovarianceReport> {
    let d = phi.dim();
    if n_bases < MIN_BASES {
        return Err(Error::InvalidParameter {
            field: "n_bases",
            reason: format!("need at least {MIN_BASES}, got {n_bases}"),
        });
    }
    if pair.0 == pair.1 || pair.0.max(pair.1) >= d {
        return Err(Error::InvalidParameter {
            field: "pair",
            reason: format!("need two distinct indices below {d}, got {pair:?}"),
        });
    }
    let (_, var) = phi
        .exact_moments()
        .ok_or(Error::MeasureUnavailable("test function has no closed-form variance"))?;
    let count = pair.0.max(pair.1) + 1;
    let pairs: Vec<(f64, f64)> = (0..n_bases)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream.trial(k).rng();
            let frame = sample_orthonormal_frame::<S, _>(d, count, &mut rng)?;
            Ok((phi.value(&frame[pair.0]), phi.value(&frame[pair.1])))
        })
        .collect::<Result<_>>()?;
    let cov = covariance(&pairs);
    let marginal: Moments = pairs.iter().map(|p| p.0).collect();
    let degenerate = var < DEGENERATE_VARIANCE;
    let scale = (d as f64 - 1.0) / var;
    Ok(CovarianceReport {
        field: S::FIELD,
        dim: d,
        n_bases,
        pair,
        exact_variance: var,
        covariance: cov,
        marginal_variance: marginal.variance(),
        bound: var / (d as f64 - 1.0),
        sharpness_ratio: (!degenerate).then(|| Estimate::new(cov.value.abs() * scale, cov.std_error * scale)),
        degenerate,
    })
}

/// `Cov(phi(b_1), phi(b_2)) = <phi, T phi> - |E phi|^2`, summed over the
/// harmonic components of `phi` weighted by their eigenvalues.
pub fn covariance_exact(phi: &SpherePolynomial) -> Result<f64> {
    let d = phi.dim() as u64;
    let mut total = 0.0;
    for (label, h) in phi.harmonic_decomposition() {
        if label == (0, 0) {
            continue;
        }
        total += radon_eigenvalue(phi.field(), label, d)?.to_f64() * h.mean_square();
    }
    Ok(total)
}

/// `tau * Var_u(phi)` when `phi - E phi` lies in a single eigenspace: one
/// harmonic degree (real) or a bidegree `(p, q)` possibly paired with its
/// conjugate `(q, p)` (complex).
pub fn cov_exact_harmonic(phi: &SpherePolynomial) -> Result<f64> {
    let parts = phi.harmonic_decomposition();
    let labels: Vec<_> = parts.keys().copied().filter(|l| *l != (0, 0)).collect();
    let Some(&first) = labels.first() else {
        return Ok(0.0);
    };
    if !labels.iter().all(|&l| l == first || l == (first.1, first.0)) {
        return Err(Error::DecompositionUnsupported);
    }
    let tau = radon_eigenvalue(phi.field(), first, phi.dim() as u64)?.to_f64();
    Ok(tau * phi.variance())
}

#[derive(Debug, Clone, Serialize)]
pub struct BasisSumVariance {
    pub variance: f64,
    pub covariance: f64,
    /// `Var(d^-1 sum_j phi(b_j)) = Var/d + (d-1)/d Cov`.
    pub value: f64,
    /// `2 Var / d`.
    pub bound: f64,
    /// False only when `d >= 4` and the bound is violated.
    pub within_bound: bool,
}

/// Variance of the basis average of `phi`, from the exact covariance.
pub fn variance_of_basis_sum(phi: &SpherePolynomial) -> Result<BasisSumVariance> {
    let d = phi.dim() as f64;
    let var = phi.variance();
    let cov = covariance_exact(phi)?;
    let value = (var / d + (d - 1.0) / d * cov).max(0.0);
    let bound = 2.0 * var / d;
    Ok(BasisSumVariance {
        variance: var,
        covariance: cov,
        value,
        bound,
        within_bound: phi.dim() < 4 || value <= bound * (1.0 + 1e-12) + 1e-15,
    })
}

/// Monte Carlo estimate of `Var(d^-1 sum_j phi(b_j))` over full Haar bases.
/// The standard error is that of the sample variance, estimated from the
/// centered squares.
pub fn basis_sum_variance_mc<S: Scalar, F: SphereFunction<S>>(phi: &F, n_bases: u64, stream: RngStream) -> Result<Estimate> {
    let d = phi.dim();
    let avgs: Vec<f64> = (0..n_bases)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream.trial(k).rng();
            let q = haar_random_factor::<S, _>(d, &mut rng)?.to_matrix();
            Ok(q.columns().map(|b| phi.value(b)).sum::<f64>() / d as f64)
        })
        .collect::<Result<_>>()?;
    let m: Moments = avgs.iter().copied().collect();
    let n = avgs.len() as f64;
    let sq: Moments = avgs.iter().map(|a| (a - m.mean()).powi(2)).collect();
    Ok(Estimate::new(m.variance(), sq.std_error() * n / (n - 1.0)))
}

/// `x_1^2 - 1/d` (real) or `|z_1|^2 - 1/d` (complex): in the eigenspace with
/// eigenvalue `-1/(d-1)`, so the covariance bound holds with equality.
pub fn sharpness_witness(field: FieldTag, dim: usize) -> SpherePolynomial {
    let p = SpherePolynomial::abs2_variable(field, dim, 0);
    &p - &SpherePolynomial::constant(field, dim, 1.0 / dim as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn real(s: &str, d: usize) -> SpherePolynomial {
        SpherePolynomial::parse(s, FieldTag::Real, d).unwrap()
    }

    #[test]
    fn variance_examples() {
        assert_eq!(variance_u(&SpherePolynomial::constant(FieldTag::Real, 5, 3.0)), 0.0);
        for d in [4usize, 10, 31] {
            let df = d as f64;
            let v = variance_u(&real("x1^2", d));
            let expect = 2.0 * (df - 1.0) / (df * df * (df + 2.0));
            assert!((v - expect).abs() < 1e-15 * expect.max(1.0), "{d}");
        }
    }

    #[test]
    fn exact_covariance_examples() {
        let d = 10;
        let c = covariance_exact(&real("x1^2", d)).unwrap();
        assert!((c + 1.0 / 600.0).abs() < 1e-16);
        let w = sharpness_witness(FieldTag::Real, d);
        assert!((cov_exact_harmonic(&w).unwrap() + w.variance() / 9.0).abs() < 1e-16);
        assert_eq!(cov_exact_harmonic(&real("x1", d)).unwrap(), 0.0);
        assert!(matches!(cov_exact_harmonic(&real("x1^2 + x1", d)), Err(Error::DecompositionUnsupported)));
        let wc = sharpness_witness(FieldTag::Complex, 8);
        assert!((cov_exact_harmonic(&wc).unwrap() + wc.variance() / 7.0).abs() < 1e-16);
    }

    #[test]
    fn harmonic_quartic_in_seven_dimensions() {
        let mut rng = RngStream::from_seed(2).rng();
        let p = crate::radon::random_harmonic(FieldTag::Real, (4, 0), 7, &mut rng).unwrap();
        // tau_4 = alpha_{4,6} = 3 * 4!! / 8!! = 1/16
        let c = cov_exact_harmonic(&p).unwrap();
        assert!((c - p.variance() / 16.0).abs() < 1e-12 * p.variance());
        assert!((covariance_exact(&p).unwrap() - c).abs() < 1e-12 * p.variance());
    }

    #[test]
    fn basis_sum_examples() {
        let s = variance_of_basis_sum(&SpherePolynomial::constant(FieldTag::Real, 6, 1.0)).unwrap();
        assert_eq!(s.value, 0.0);
        let s = variance_of_basis_sum(&sharpness_witness(FieldTag::Real, 10)).unwrap();
        assert!(s.value.abs() < 1e-16);
        let mixed = real("x1^2 + x1^4 + 0.5*x2*x3", 8);
        let s = variance_of_basis_sum(&mixed).unwrap();
        assert!(s.within_bound && s.value > 0.0);
        let mc = basis_sum_variance_mc::<f64, _>(&mixed, 4000, RngStream::from_seed(6)).unwrap();
        assert!(mc.within_sigma(s.value, 4.0), "{mc:?} vs {}", s.value);
    }

    #[test]
    fn monte_carlo_matches_exact_covariance() {
        let phi = real("x1^2", 10);
        let r = cov_pair_mc::<f64, _>(&phi, 20_000, (0, 1), RngStream::from_seed(9)).unwrap();
        assert!(r.covariance.within_sigma(-1.0 / 600.0, 4.0), "{r:?}");
        assert!(r.within_bound(4.0));
        let c = SpherePolynomial::constant(FieldTag::Real, 10, 2.0);
        let r = cov_pair_mc::<f64, _>(&c, 1000, (0, 1), RngStream::from_seed(9)).unwrap();
        assert_eq!(r.covariance.value, 0.0);
        assert!(r.degenerate && r.sharpness_ratio.is_none());
        let z = sharpness_witness(FieldTag::Complex, 8);
        let r = cov_pair_mc::<Complex64, _>(&z, 20_000, (0, 1), RngStream::from_seed(10)).unwrap();
        assert!(r.sharpness_ratio.unwrap().within_sigma(1.0, 4.0), "{r:?}");
        assert!(cov_pair_mc::<f64, _>(&phi, 999, (0, 1), RngStream::from_seed(1)).is_err());
        assert!(cov_pair_mc::<f64, _>(&phi, 1000, (3, 3), RngStream::from_seed(1)).is_err());
    }
}
