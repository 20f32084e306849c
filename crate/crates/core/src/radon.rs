//! The averaging operator `(T f)(x) = E[f(y)]`, `y` uniform on `S(x^perp)`:
//! its closed-form spectrum, harmonic eigenfunctions and Monte Carlo checks.

use std::collections::BTreeMap;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::combinatorics::rational_to_f64;
use crate::exact::moments::{alpha, beta, reciprocal};
use crate::exact::tensor::{sorted_tuples, BiSymmetricTensor, SymmetricTensor};
use crate::field::{FieldTag, Scalar};
use crate::polynomial::{DegreeLabel, SpherePolynomial};
use crate::sphere::{sample_uniform_on_orthocomplement, sample_uniform_sphere, UnitVector};
use crate::stats::{two_sample_z, Estimate, Moments};

/// Smallest dimension for which the closed forms are asserted.
pub const MIN_THEOREM_DIM: u64 = 4;

/// An eigenvalue of `T` together with a note when `d` lies below the range
/// where the closed form is established.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenvalue {
    pub value: BigRational,
    pub warning: Option<String>,
}

impl Eigenvalue {
    pub fn to_f64(&self) -> f64 {
        rational_to_f64(&self.value)
    }
}

fn range_warning(d: u64) -> Result<Option<String>> {
    if d < 2 {
        return Err(Error::InvalidDimension {
            dim: d as usize,
            reason: "the orthogonal complement is empty",
        });
    }
    Ok((d < MIN_THEOREM_DIM).then(|| format!("dimension {d} is below {MIN_THEOREM_DIM}; value computed but not established")))
}

/// Eigenvalue on degree-`l` harmonics of `S(R^d)`: 1 at `l = 0`, 0 for odd
/// `l`, `(-1)^{l/2} alpha_{l,d-1}` otherwise.
pub fn radon_eigenvalue_real(l: u64, d: u64) -> Result<Eigenvalue> {
    let warning = range_warning(d)?;
    let value = if l % 2 == 1 {
        BigRational::zero()
    } else {
        let a = alpha(l, d - 1)?;
        if (l / 2) % 2 == 1 {
            -a
        } else {
            a
        }
    };
    Ok(Eigenvalue { value, warning })
}

/// Eigenvalue on bidegree-`(l, lp)` harmonics of `S(C^d)`: zero unless
/// `l == lp`, then `(-1)^l beta_{l,d-1}`.
pub fn radon_eigenvalue_complex(l: u64, lp: u64, d: u64) -> Result<Eigenvalue> {
    let warning = range_warning(d)?;
    let value = if l != lp {
        BigRational::zero()
    } else {
        let b = beta(l, d - 1)?;
        if l % 2 == 1 {
            -b
        } else {
            b
        }
    };
    Ok(Eigenvalue { value, warning })
}

/// Eigenvalue for a degree label as produced by
/// [`SpherePolynomial::harmonic_decomposition`].
pub fn radon_eigenvalue(field: FieldTag, label: DegreeLabel, d: u64) -> Result<Eigenvalue> {
    match field {
        FieldTag::Real => radon_eigenvalue_real(u64::from(label.0), d),
        FieldTag::Complex => radon_eigenvalue_complex(u64::from(label.0), u64::from(label.1), d),
    }
}

/// Exact eigenvalues on every degree up to `max_degree`, by label.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenvalueTable {
    pub field: FieldTag,
    pub dim: u64,
    pub entries: BTreeMap<DegreeLabel, BigRational>,
}

impl EigenvalueTable {
    /// Fills the table from the closed forms. Complex tables list every
    /// pair `(l, lp)` with both entries at most `max_degree`.
    pub fn build(field: FieldTag, dim: u64, max_degree: u32) -> Result<Self> {
        range_warning(dim)?;
        let mut entries = BTreeMap::new();
        match field {
            FieldTag::Real => {
                // tau_{l+2} / tau_l = -(l+1)/(l+d-1), tau_0 = 1
                let mut tau = BigRational::one();
                for l in 0..=max_degree {
                    if l % 2 == 1 {
                        entries.insert((l, 0), BigRational::zero());
                    } else {
                        entries.insert((l, 0), tau.clone());
                        let l = u64::from(l);
                        tau = -tau * BigRational::new((l + 1).into(), (l + dim - 1).into());
                    }
                }
            }
            FieldTag::Complex => {
                // tau_{l+1} / tau_l = -(l+1)/(l+d-1)
                let mut tau = BigRational::one();
                for l in 0..=max_degree {
                    for lp in 0..=max_degree {
                        entries.insert((l, lp), if l == lp { tau.clone() } else { BigRational::zero() });
                    }
                    let l = u64::from(l);
                    tau = -tau * BigRational::new((l + 1).into(), (l + dim - 1).into());
                }
            }
        }
        Ok(Self { field, dim, entries })
    }

    /// Largest `|tau|` over nonconstant labels.
    pub fn largest_nontrivial(&self) -> Option<(DegreeLabel, BigRational)> {
        self.entries
            .iter()
            .filter(|(l, _)| **l != (0, 0))
            .max_by(|a, b| a.1.abs().cmp(&b.1.abs()))
            .map(|(l, v)| (*l, v.abs()))
    }
}

/// Labels of the eigenspaces attaining the gap: degree 2 (real) or
/// bidegree (1, 1) (complex).
pub fn gap_label(field: FieldTag) -> DegreeLabel {
    match field {
        FieldTag::Real => (2, 0),
        FieldTag::Complex => (1, 1),
    }
}

/// Second largest absolute eigenvalue, `1/(d-1)`, after checking it against
/// every nonconstant eigenvalue with degrees up to 100.
pub fn spectral_gap(d: u64, field: FieldTag) -> Result<BigRational> {
    let gap = reciprocal(d - 1);
    let table = EigenvalueTable::build(field, d, 100)?;
    for (label, tau) in &table.entries {
        let a = tau.abs();
        let ok = if *label == (0, 0) {
            a.is_one()
        } else if *label == gap_label(field) {
            a == gap
        } else {
            a < gap
        };
        if !ok {
            return Err(Error::Domain(format!("eigenvalue {tau} at {label:?} breaks the gap 1/{}", d - 1)));
        }
    }
    Ok(gap)
}

/// Removes all traces of a symmetric tensor: the result is the coefficient
/// tensor of the harmonic part of its polynomial, differing from the input
/// by symmetrized multiples of the identity.
pub fn make_traceless(c: &SymmetricTensor) -> Result<SymmetricTensor> {
    check_rank(c.rank(), MAX_TRACELESS_RANK)?;
    let h = SpherePolynomial::from_tensor(c).harmonic_projection()?;
    let mut t = if h.is_zero() {
        SymmetricTensor::zeros(c.dim(), c.rank())
    } else {
        h.to_tensor()?
    };
    snap_to_zero(&mut t, c.max_abs());
    Ok(t)
}

/// Complex analogue of [`make_traceless`].
pub fn make_traceless_bi(c: &BiSymmetricTensor) -> Result<BiSymmetricTensor> {
    let (l, lp) = c.ranks();
    check_rank(l.max(lp), MAX_TRACELESS_BIRANK)?;
    let h = SpherePolynomial::from_bitensor(c).harmonic_projection()?;
    if h.is_zero() {
        return Ok(BiSymmetricTensor::zeros(c.dim(), c.ranks()));
    }
    let scale = c.max_abs().max(1.0);
    h.pruned(1e-15 * scale).to_bitensor()
}

pub const MAX_TRACELESS_RANK: usize = 8;
pub const MAX_TRACELESS_BIRANK: usize = 4;

fn check_rank(rank: usize, max: usize) -> Result<()> {
    if rank > max {
        Err(Error::ResourceLimit(format!("traceless projection supports ranks up to {max}, got {rank}")))
    } else {
        Ok(())
    }
}

fn snap_to_zero(t: &mut SymmetricTensor, scale: f64) {
    let tol = 1e-15 * scale.max(1.0);
    let small: Vec<Vec<usize>> = t.entries().filter(|(_, v)| v.abs() <= tol).map(|(k, _)| k.to_vec()).collect();
    for k in small {
        t.set(&k, 0.0);
    }
}

/// Largest coefficient of the Laplacian of a homogeneous polynomial; zero
/// exactly for harmonic input.
pub fn laplacian_check(p: &SpherePolynomial) -> Result<f64> {
    if !p.is_homogeneous() {
        return Err(Error::Domain("laplacian check needs a homogeneous polynomial".into()));
    }
    Ok(p.laplacian().max_abs_coefficient())
}

/// Average of `P` over the great subsphere `{x_axis = 0}`, from monomial
/// moments in one dimension less. For complex polynomials the real part is
/// returned.
pub fn equator_average_exact(p: &SpherePolynomial, axis: usize) -> Result<f64> {
    Ok(p.restrict_equator(axis)?.sphere_average().re)
}

/// `T P` in closed form: each harmonic component is scaled by its
/// eigenvalue.
pub fn apply_radon_exact(p: &SpherePolynomial) -> Result<SpherePolynomial> {
    let d = p.dim() as u64;
    let mut out = SpherePolynomial::zero(p.field(), p.dim());
    for (label, h) in p.harmonic_decomposition() {
        let tau = radon_eigenvalue(p.field(), label, d)?.to_f64();
        out = &out + &h.scale_real(tau);
    }
    Ok(out)
}

/// Minimum number of samples for [`apply_radon_mc`].
pub const MIN_RADON_SAMPLES: u64 = 100;

/// Monte Carlo estimate of `(T P)(x)` (real part) with its standard error.
pub fn apply_radon_mc<S: Scalar, R: Rng + ?Sized>(
    p: &SpherePolynomial,
    x: &UnitVector<S>,
    samples: u64,
    rng: &mut R,
) -> Result<Estimate> {
    if p.dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            actual: x.dim(),
        });
    }
    if samples < MIN_RADON_SAMPLES {
        return Err(Error::InvalidParameter {
            field: "samples",
            reason: format!("need at least {MIN_RADON_SAMPLES}, got {samples}"),
        });
    }
    if p.is_constant() {
        return Ok(Estimate::new(p.constant_term().re, 0.0));
    }
    let mut m = Moments::new();
    for _ in 0..samples {
        let y = sample_uniform_on_orthocomplement(x, rng)?;
        m.push(p.eval_real(y.as_slice()));
    }
    Ok(m.estimate())
}

/// `<P, T^k Q>` estimated along `k`-step walks `x_0, x_1, ..., x_k` with
/// `x_0` uniform and `x_{i+1}` uniform on `S(x_i^perp)`; returns the
/// sample mean of `conj(P(x_0)) Q(x_k)` (real part).
pub fn walk_correlation_mc<S: Scalar, R: Rng + ?Sized>(
    p: &SpherePolynomial,
    q: &SpherePolynomial,
    steps: u32,
    samples: u64,
    rng: &mut R,
) -> Result<Estimate> {
    let d = p.dim();
    let mut m = Moments::new();
    for _ in 0..samples {
        let x0 = sample_uniform_sphere::<S, R>(d, rng)?;
        let mut x = x0.clone();
        for _ in 0..steps {
            x = sample_uniform_on_orthocomplement(&x, rng)?;
        }
        m.push((p.eval(x0.as_slice()).conj() * q.eval(x.as_slice())).re);
    }
    Ok(m.estimate())
}

/// Paired witness of self-adjointness: over pairs `(x, y)` with `y` uniform
/// on `S(x^perp)`, `E conj(P(x)) Q(y)` estimates `<P, TQ>` and
/// `E conj(P(y)) Q(x)` estimates `<TP, Q>`.
#[derive(Debug, Clone, Serialize)]
pub struct SelfAdjointness {
    pub p_tq: Estimate,
    pub tp_q: Estimate,
    /// Mean difference over the same pairs, with its standard error.
    pub difference: Estimate,
}

pub fn self_adjointness_mc<S: Scalar, R: Rng + ?Sized>(
    p: &SpherePolynomial,
    q: &SpherePolynomial,
    samples: u64,
    rng: &mut R,
) -> Result<SelfAdjointness> {
    let d = p.dim();
    let (mut a, mut b, mut diff) = (Moments::new(), Moments::new(), Moments::new());
    for _ in 0..samples {
        let x = sample_uniform_sphere::<S, R>(d, rng)?;
        let y = sample_uniform_on_orthocomplement(&x, rng)?;
        let u = (p.eval(x.as_slice()).conj() * q.eval(y.as_slice())).re;
        let v = (p.eval(y.as_slice()).conj() * q.eval(x.as_slice())).re;
        a.push(u);
        b.push(v);
        diff.push(u - v);
    }
    Ok(SelfAdjointness {
        p_tq: a.estimate(),
        tp_q: b.estimate(),
        difference: diff.estimate(),
    })
}

/// Random real-valued harmonic polynomial with the given label: Gaussian
/// coefficients, projected onto harmonics; complex ones are symmetrized as
/// `H + conj(H)`, which stays in the eigenspace of `(l, lp)` and `(lp, l)`.
pub fn random_harmonic<R: Rng + ?Sized>(field: FieldTag, label: DegreeLabel, dim: usize, rng: &mut R) -> Result<SpherePolynomial> {
    use rand_distr::StandardNormal;
    let mut draw = || -> f64 { rng.sample(StandardNormal) };
    match field {
        FieldTag::Real => {
            let rank = label.0 as usize;
            check_rank(rank, MAX_TRACELESS_RANK)?;
            let mut c = SymmetricTensor::zeros(dim, rank);
            for k in sorted_tuples(dim, rank) {
                c.set(&k, draw());
            }
            Ok(SpherePolynomial::from_tensor(&make_traceless(&c)?))
        }
        FieldTag::Complex => {
            let (l, lp) = (label.0 as usize, label.1 as usize);
            check_rank(l.max(lp), MAX_TRACELESS_BIRANK)?;
            let mut c = BiSymmetricTensor::zeros(dim, (l, lp));
            for a in sorted_tuples(dim, l) {
                for b in sorted_tuples(dim, lp) {
                    c.set(&a, &b, Complex64::new(draw(), draw()));
                }
            }
            let h = SpherePolynomial::from_bitensor(&make_traceless_bi(&c)?);
            Ok(&h + &h.conj())
        }
    }
}

/// Outcome of checking one evaluation point.
#[derive(Debug, Clone, Serialize)]
pub struct PointCheck {
    pub p_at_x: f64,
    pub radon_estimate: Estimate,
    /// `(T P)(x) / P(x)` with its standard error.
    pub ratio: Estimate,
    pub z_score: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenvalueReport {
    pub field: FieldTag,
    pub dim: usize,
    pub label: DegreeLabel,
    /// Closed-form eigenvalue as `num/den`.
    pub tau: String,
    pub tau_f64: f64,
    pub warning: Option<String>,
    pub samples_per_point: u64,
    pub points: Vec<PointCheck>,
    /// Inverse-variance weighted mean of the ratios.
    pub pooled: Estimate,
    /// Largest pairwise z statistic between ratios at different points.
    pub max_pairwise_z: f64,
    pub sigma: f64,
    pub all_points_within: bool,
    pub point_independent: bool,
}

impl EigenvalueReport {
    pub fn passed(&self) -> bool {
        self.all_points_within && self.point_independent
    }
}

/// Acceptance band, in standard errors, of the Monte Carlo checks.
pub const SIGMA_BAND: f64 = 4.0;

/// Draws a random harmonic `P` with the given label, evaluates `T P` by
/// Monte Carlo at `points` random points where `|P(x)| >= 0.1 sup|P|`, and
/// compares each ratio `(T P)(x)/P(x)` with the closed-form eigenvalue.
pub fn verify_eigenvalue<R: Rng + ?Sized>(
    label: DegreeLabel,
    dim: usize,
    field: FieldTag,
    samples: u64,
    points: usize,
    rng: &mut R,
) -> Result<EigenvalueReport> {
    let tau = radon_eigenvalue(field, label, dim as u64)?;
    let p = random_harmonic(field, label, dim, rng)?;
    if p.is_zero() {
        return Err(Error::Domain(format!("no harmonic polynomials of degree {label:?} in dimension {dim}")));
    }
    let checks = match field {
        FieldTag::Real => check_points::<f64, R>(&p, points, samples, tau.to_f64(), rng)?,
        FieldTag::Complex => check_points::<Complex64, R>(&p, points, samples, tau.to_f64(), rng)?,
    };
    let pooled = pool(&checks);
    let mut max_pairwise_z = 0.0f64;
    for (i, a) in checks.iter().enumerate() {
        for b in &checks[i + 1..] {
            max_pairwise_z = max_pairwise_z.max(two_sample_z(a.ratio, b.ratio));
        }
    }
    let all_points_within = checks.iter().all(|c| c.z_score <= SIGMA_BAND);
    Ok(EigenvalueReport {
        field,
        dim,
        label,
        tau: tau.value.to_string(),
        tau_f64: tau.to_f64(),
        warning: tau.warning,
        samples_per_point: samples,
        points: checks,
        pooled,
        max_pairwise_z,
        sigma: SIGMA_BAND,
        all_points_within,
        point_independent: max_pairwise_z <= SIGMA_BAND,
    })
}

fn pool(checks: &[PointCheck]) -> Estimate {
    if checks.iter().any(|c| c.ratio.std_error == 0.0) {
        let v = checks.iter().map(|c| c.ratio.value).sum::<f64>() / checks.len().max(1) as f64;
        return Estimate::new(v, 0.0);
    }
    let (mut num, mut den) = (0.0, 0.0);
    for c in checks {
        let w = c.ratio.std_error.powi(-2);
        num += w * c.ratio.value;
        den += w;
    }
    Estimate::new(num / den, den.sqrt().recip())
}

/// Points tried when estimating `sup |P|` and when looking for a point
/// where `|P|` is not small.
const SUP_PROBES: usize = 2000;
const MAX_RESAMPLES: usize = 10_000;

fn check_points<S: Scalar, R: Rng + ?Sized>(
    p: &SpherePolynomial,
    points: usize,
    samples: u64,
    tau: f64,
    rng: &mut R,
) -> Result<Vec<PointCheck>> {
    let d = p.dim();
    let mut sup = 0.0f64;
    for _ in 0..SUP_PROBES {
        let x = sample_uniform_sphere::<S, R>(d, rng)?;
        sup = sup.max(p.eval_real(x.as_slice()).abs());
    }
    let mut out = Vec::with_capacity(points);
    for _ in 0..points {
        let mut tries = 0;
        let x = loop {
            let x = sample_uniform_sphere::<S, R>(d, rng)?;
            if p.eval_real(x.as_slice()).abs() >= 0.1 * sup {
                break x;
            }
            tries += 1;
            if tries >= MAX_RESAMPLES {
                return Err(Error::Convergence("no point with |P(x)| >= 0.1 sup|P| found".into()));
            }
        };
        let px = p.eval_real(x.as_slice());
        let est = apply_radon_mc(p, &x, samples, rng)?;
        let ratio = Estimate::new(est.value / px, est.std_error / px.abs());
        out.push(PointCheck {
            p_at_x: px,
            radon_estimate: est,
            ratio,
            z_score: ratio.z_score(tau),
        });
    }
    Ok(out)
}
