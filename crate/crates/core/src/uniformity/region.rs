//! Test regions on the sphere, their measures, and partitions.
//!
//! Every axial region is defined through `s = <a, x>` for a unit axis `a`
//! (`Re s` for caps, bands and halfspaces, `|s|^2` for complex caps).
//! Thresholds are strict: points on the boundary are outside. The boundary
//! has measure zero, so this only matters for reproducing exact counts.

use std::fmt;
use std::sync::Arc;

use statrs::function::beta::checked_beta_reg;

use crate::error::{Error, Result};
use crate::field::{inner, FieldTag, Scalar};
use crate::polynomial::SphereFunction;
use crate::rng::RngStream;
use crate::sphere::sample_uniform_sphere;
use crate::stats::{Estimate, Moments};

pub type Predicate<S> = Arc<dyn Fn(&[S]) -> bool + Send + Sync>;

#[derive(Clone)]
pub enum TestRegion<S> {
    /// The whole sphere.
    Sphere { dim: usize },
    /// `Re <a, x> > height`.
    RealCap { axis: Vec<S>, height: f64 },
    /// `|<a, x>|^2 > level`.
    ComplexCap { axis: Vec<S>, level: f64 },
    /// `lower < Re <a, x> <= upper`. Half open so that consecutive bands
    /// tile the sphere.
    Band { axis: Vec<S>, lower: f64, upper: f64 },
    /// `Re <a, x> > 0`.
    Halfspace { axis: Vec<S> },
    Complement(Box<TestRegion<S>>),
    Custom {
        dim: usize,
        predicate: Predicate<S>,
        measure: Option<f64>,
    },
}

impl<S: Scalar> fmt::Debug for TestRegion<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Sphere { dim } => write!(f, "Sphere(d={dim})"),
            Self::RealCap { height, .. } => write!(f, "RealCap(t={height})"),
            Self::ComplexCap { level, .. } => write!(f, "ComplexCap(c={level})"),
            Self::Band { lower, upper, .. } => write!(f, "Band({lower}, {upper}]"),
            Self::Halfspace { .. } => write!(f, "Halfspace"),
            Self::Complement(r) => write!(f, "Complement({r:?})"),
            Self::Custom { measure, .. } => write!(f, "Custom(measure={measure:?})"),
        }
    }
}

fn e1<S: Scalar>(dim: usize) -> Vec<S> {
    let mut v = vec![S::zero(); dim];
    v[0] = S::one();
    v
}

fn check_axis<S: Scalar>(axis: &[S]) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::InvalidDimension {
            dim: 0,
            reason: "axis must be nonempty",
        });
    }
    let n = crate::field::norm2(axis).sqrt();
    if (n - 1.0).abs() > crate::sphere::UNIT_NORM_TOL {
        return Err(Error::InvalidParameter {
            field: "axis",
            reason: format!("axis norm {n} is not 1"),
        });
    }
    Ok(())
}

impl<S: Scalar> TestRegion<S> {
    pub fn sphere(dim: usize) -> Self {
        Self::Sphere { dim }
    }

    pub fn real_cap(axis: Vec<S>, height: f64) -> Result<Self> {
        check_axis(&axis)?;
        if !(-1.0..=1.0).contains(&height) {
            return Err(Error::InvalidParameter {
                field: "height",
                reason: format!("{height} is outside [-1, 1]"),
            });
        }
        Ok(Self::RealCap { axis, height })
    }

    /// Cap around `e_1` whose measure is `measure`, height found by bisection.
    pub fn real_cap_with_measure(dim: usize, measure: f64) -> Result<Self> {
        check_unit_interval("measure", measure)?;
        let n = S::FIELD.real_dim(dim);
        let height = real_cap_height(n, measure)?;
        Self::real_cap(e1(dim), height)
    }

    pub fn complex_cap(axis: Vec<S>, level: f64) -> Result<Self> {
        check_axis(&axis)?;
        check_unit_interval("level", level)?;
        Ok(Self::ComplexCap { axis, level })
    }

    pub fn band(axis: Vec<S>, lower: f64, upper: f64) -> Result<Self> {
        check_axis(&axis)?;
        if !(lower <= upper) {
            return Err(Error::InvalidParameter {
                field: "band",
                reason: format!("lower {lower} exceeds upper {upper}"),
            });
        }
        Ok(Self::Band { axis, lower, upper })
    }

    pub fn halfspace(axis: Vec<S>) -> Result<Self> {
        check_axis(&axis)?;
        Ok(Self::Halfspace { axis })
    }

    pub fn complement(self) -> Self {
        Self::Complement(Box::new(self))
    }

    pub fn custom(dim: usize, predicate: impl Fn(&[S]) -> bool + Send + Sync + 'static, measure: Option<f64>) -> Self {
        Self::Custom {
            dim,
            predicate: Arc::new(predicate),
            measure,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Sphere { dim } | Self::Custom { dim, .. } => *dim,
            Self::RealCap { axis, .. } | Self::ComplexCap { axis, .. } | Self::Band { axis, .. } | Self::Halfspace { axis } => {
                axis.len()
            }
            Self::Complement(r) => r.dim(),
        }
    }

    /// Axis of an axial region; `None` for the whole sphere and custom sets.
    pub fn axis(&self) -> Option<&[S]> {
        match self {
            Self::RealCap { axis, .. } | Self::ComplexCap { axis, .. } | Self::Band { axis, .. } | Self::Halfspace { axis } => {
                Some(axis)
            }
            Self::Complement(r) => r.axis(),
            Self::Sphere { .. } | Self::Custom { .. } => None,
        }
    }

    /// Whether membership depends on `x` only through `<a, x>` for the
    /// region's axis (the whole sphere qualifies trivially).
    pub fn is_axial(&self) -> bool {
        match self {
            Self::Custom { .. } => false,
            Self::Complement(r) => r.is_axial(),
            _ => true,
        }
    }

    /// Membership from `s = <a, x>`; only for axial regions.
    pub fn contains_projection(&self, s: S) -> bool {
        match self {
            Self::Sphere { .. } => true,
            Self::RealCap { height, .. } => s.re() > *height,
            Self::ComplexCap { level, .. } => s.abs2() > *level,
            Self::Band { lower, upper, .. } => {
                let r = s.re();
                r > *lower && r <= *upper
            }
            Self::Halfspace { .. } => s.re() > 0.0,
            Self::Complement(r) => !r.contains_projection(s),
            Self::Custom { .. } => panic!("custom regions have no axis"),
        }
    }

    pub fn contains(&self, x: &[S]) -> bool {
        match self {
            Self::Custom { predicate, .. } => predicate(x),
            Self::Complement(r) => !r.contains(x),
            _ => {
                let s = self.axis().map_or(S::zero(), |a| inner(a, x));
                self.contains_projection(s)
            }
        }
    }

    /// `u(A)` in closed form.
    pub fn measure(&self) -> Result<f64> {
        let n = S::FIELD.real_dim(self.dim());
        match self {
            Self::Sphere { .. } => Ok(1.0),
            Self::RealCap { height, .. } => Ok(real_cap_measure(n, *height)),
            Self::ComplexCap { level, .. } => Ok(complex_cap_measure(S::FIELD, self.dim(), *level)),
            Self::Band { lower, upper, .. } => Ok((real_cap_measure(n, *lower) - real_cap_measure(n, *upper)).max(0.0)),
            Self::Halfspace { .. } => Ok(real_cap_measure(n, 0.0)),
            Self::Complement(r) => Ok(1.0 - r.measure()?),
            Self::Custom { measure, .. } => measure.ok_or(Error::MeasureUnavailable("custom region without a supplied measure")),
        }
    }
}

impl<S: Scalar> SphereFunction<S> for TestRegion<S> {
    fn dim(&self) -> usize {
        TestRegion::dim(self)
    }

    fn value(&self, x: &[S]) -> f64 {
        f64::from(u8::from(self.contains(x)))
    }

    fn exact_moments(&self) -> Option<(f64, f64)> {
        self.measure().ok().map(|u| (u, u * (1.0 - u)))
    }
}

fn check_unit_interval(field: &'static str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidParameter {
            field,
            reason: format!("{v} is outside [0, 1]"),
        });
    }
    Ok(())
}

/// `u(s > t)` for the first coordinate `s` of a uniform point of `S(R^n)`:
/// `I_{1-t^2}((n-1)/2, 1/2) / 2` for `t >= 0`, reflected for `t < 0`.
pub fn real_cap_measure(n: usize, t: f64) -> f64 {
    if t >= 1.0 {
        return 0.0;
    }
    if t < -1.0 {
        return 1.0;
    }
    if n == 1 {
        // two points, +1 and -1
        return 0.5 * (f64::from(u8::from(1.0 > t)) + f64::from(u8::from(-1.0 > t)));
    }
    if t < 0.0 {
        return 1.0 - real_cap_measure(n, -t);
    }
    let x = (1.0 - t) * (1.0 + t);
    0.5 * checked_beta_reg(0.5 * (n as f64 - 1.0), 0.5, x).expect("arguments are in range")
}

/// `u(|<a, x>|^2 > c)`: `(1 - c)^{d-1}` on `S(C^d)`, `2 u(s > sqrt c)` on
/// `S(R^d)`.
pub fn complex_cap_measure(field: FieldTag, dim: usize, c: f64) -> f64 {
    if c >= 1.0 {
        return 0.0;
    }
    if c <= 0.0 {
        return 1.0;
    }
    match field {
        FieldTag::Complex => (1.0 - c).powi(dim as i32 - 1),
        FieldTag::Real => 2.0 * real_cap_measure(dim, c.sqrt()),
    }
}

/// Height `t` with `u(s > t) = measure` on `S(R^n)`, by bisection.
pub fn real_cap_height(n: usize, measure: f64) -> Result<f64> {
    check_unit_interval("measure", measure)?;
    if n < 2 {
        return Err(Error::InvalidDimension {
            dim: n,
            reason: "caps of prescribed measure need real dimension at least 2",
        });
    }
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if real_cap_measure(n, mid) > measure {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Monte Carlo estimate of `u(A)` from `samples` uniform points.
pub fn estimate_region_measure<S: Scalar>(region: &TestRegion<S>, samples: u64, stream: RngStream) -> Result<Estimate> {
    let mut rng = stream.rng();
    let mut m = Moments::new();
    for _ in 0..samples {
        let x = sample_uniform_sphere::<S, _>(region.dim(), &mut rng)?;
        m.push(f64::from(u8::from(region.contains(x.as_slice()))));
    }
    Ok(m.estimate())
}

/// Regions whose measures sum to one; disjointness comes from how the cells
/// are built (thresholds on a common axis).
#[derive(Debug, Clone)]
pub struct Partition<S: Scalar> {
    regions: Vec<TestRegion<S>>,
    measures: Vec<f64>,
}

pub const PARTITION_TOL: f64 = 1e-9;

impl<S: Scalar> Partition<S> {
    pub fn new(regions: Vec<TestRegion<S>>) -> Result<Self> {
        if regions.is_empty() {
            return Err(Error::InvalidParameter {
                field: "partition",
                reason: "no cells".into(),
            });
        }
        let measures = regions.iter().map(TestRegion::measure).collect::<Result<Vec<_>>>()?;
        let total: f64 = measures.iter().sum();
        if (total - 1.0).abs() > PARTITION_TOL {
            return Err(Error::InvalidParameter {
                field: "partition",
                reason: format!("cell measures sum to {total}"),
            });
        }
        Ok(Self { regions, measures })
    }

    pub fn regions(&self) -> &[TestRegion<S>] {
        &self.regions
    }

    pub fn measures(&self) -> &[f64] {
        &self.measures
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }
}

pub const MAX_BANDS: usize = 10_000;

/// `m` bands `(s_{k-1}, s_k]` in `Re <e_1, x>` with `u` of each equal to
/// `1/m`; `m = 1` gives the whole sphere.
pub fn equal_measure_bands<S: Scalar>(m: usize, dim: usize) -> Result<Partition<S>> {
    if m == 0 {
        return Err(Error::InvalidParameter {
            field: "m",
            reason: "need at least one band".into(),
        });
    }
    if m > MAX_BANDS {
        return Err(Error::Convergence(format!("{m} bands exceed the supported resolution of {MAX_BANDS}")));
    }
    if m == 1 {
        return Partition::new(vec![TestRegion::sphere(dim)]);
    }
    let n = S::FIELD.real_dim(dim);
    // s_k = -s_{m-k} by symmetry; the middle threshold of an even m is 0
    let mut s = vec![0.0; m + 1];
    s[0] = -1.0 - f64::EPSILON;
    s[m] = 1.0;
    for k in 1..m {
        if 2 * k < m {
            s[k] = real_cap_height(n, 1.0 - k as f64 / m as f64)?;
        } else if 2 * k == m {
            s[k] = 0.0;
        } else {
            s[k] = -s[m - k];
        }
    }
    if s.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Convergence(format!("{m} bands are not resolvable in floating point")));
    }
    let regions = s
        .windows(2)
        .map(|w| TestRegion::band(e1(dim), w[0], w[1]))
        .collect::<Result<Vec<_>>>()?;
    let p = Partition::new(regions)?;
    let target = 1.0 / m as f64;
    if p.measures.iter().any(|u| (u - target).abs() > PARTITION_TOL) {
        return Err(Error::Convergence(format!("band measures missed 1/{m} by more than {PARTITION_TOL}")));
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    #[test]
    fn cap_measure_against_low_dimensional_formulas() {
        for k in 0..=40 {
            let t = -1.0 + k as f64 / 20.0;
            let circle = t.acos() / PI;
            let sphere = (1.0 - t) / 2.0;
            let s3 = (t.acos() - t * (1.0 - t * t).sqrt()) / PI;
            assert!((real_cap_measure(2, t) - circle).abs() < 1e-12, "n=2 t={t}");
            assert!((real_cap_measure(3, t) - sphere).abs() < 1e-12, "n=3 t={t}");
            assert!((real_cap_measure(4, t) - s3).abs() < 1e-12, "n=4 t={t}");
        }
        assert_eq!(real_cap_measure(1, 0.5), 0.5);
        assert_eq!(real_cap_measure(1, -0.5), 0.5);
        assert_eq!(real_cap_measure(1, -1.0 - 1e-9), 1.0);
        assert_eq!(real_cap_measure(50, 0.0), 0.5);
    }

    #[test]
    fn measure_examples() {
        let hemi = TestRegion::<f64>::real_cap(e1(7), 0.0).unwrap();
        assert_eq!(hemi.measure().unwrap(), 0.5);
        let whole = TestRegion::<Complex64>::complex_cap(e1(5), 0.0).unwrap();
        assert_eq!(whole.measure().unwrap(), 1.0);
        let half = TestRegion::<Complex64>::complex_cap(e1(2), 0.5).unwrap();
        assert!((half.measure().unwrap() - 0.5).abs() < 1e-15);
        let c = hemi.clone().complement();
        assert_eq!(c.measure().unwrap(), 0.5);
        let custom = TestRegion::<f64>::custom(3, |x| x[2] > 0.0, None);
        assert!(matches!(custom.measure(), Err(Error::MeasureUnavailable(_))));
        assert!(TestRegion::<f64>::real_cap(e1(3), 1.5).is_err());
        assert!(TestRegion::<f64>::complex_cap(vec![2.0, 0.0], 0.1).is_err());
    }

    #[test]
    fn measures_match_monte_carlo() {
        let stream = RngStream::from_seed(77);
        let regions: Vec<TestRegion<f64>> = vec![
            TestRegion::real_cap_with_measure(9, 0.3).unwrap(),
            TestRegion::complex_cap(e1(9), 0.2).unwrap(),
            TestRegion::band(e1(9), -0.2, 0.4).unwrap(),
            TestRegion::halfspace(e1(9)).unwrap(),
            TestRegion::band(e1(9), -0.2, 0.4).unwrap().complement(),
        ];
        for (k, r) in regions.iter().enumerate() {
            let est = estimate_region_measure(r, 40_000, stream.fork(k as u64)).unwrap();
            assert!(est.within_sigma(r.measure().unwrap(), 4.0), "{r:?}: {est:?}");
        }
        let half = TestRegion::<Complex64>::complex_cap(e1(2), 0.5).unwrap();
        let est = estimate_region_measure(&half, 40_000, stream.fork(99)).unwrap();
        assert!(est.within_sigma(0.5, 4.0));
        let cc = TestRegion::<Complex64>::real_cap_with_measure(6, 0.1).unwrap();
        let est = estimate_region_measure(&cc, 40_000, stream.fork(100)).unwrap();
        assert!(est.within_sigma(0.1, 4.0));
    }

    #[test]
    fn prescribed_measure_caps_hit_their_target() {
        for n in [3usize, 20, 400, 1600, 3200] {
            for u in [0.1, 0.3, 0.5, 0.9] {
                let t = real_cap_height(n, u).unwrap();
                assert!((real_cap_measure(n, t) - u).abs() < 1e-12, "n={n} u={u}");
            }
        }
    }

    #[test]
    fn strict_boundaries() {
        let h = TestRegion::<f64>::halfspace(e1(4)).unwrap();
        assert!(h.contains(&[1.0, 0.0, 0.0, 0.0]));
        assert!(!h.contains(&[0.0, 1.0, 0.0, 0.0]));
    }

    #[test]
    fn band_partitions() {
        let p = equal_measure_bands::<f64>(1, 10).unwrap();
        assert_eq!(p.len(), 1);
        let p = equal_measure_bands::<f64>(2, 10).unwrap();
        match &p.regions()[0] {
            TestRegion::Band { upper, .. } => assert_eq!(*upper, 0.0),
            other => panic!("{other:?}"),
        }
        let p = equal_measure_bands::<f64>(5, 50).unwrap();
        for u in p.measures() {
            assert!((u - 0.2).abs() < 1e-9);
        }
        let p = equal_measure_bands::<Complex64>(4, 30).unwrap();
        assert!(p.measures().iter().all(|u| (u - 0.25).abs() < 1e-9));
        // every point lies in exactly one cell
        let mut rng = RngStream::from_seed(4).rng();
        for _ in 0..1000 {
            let x = sample_uniform_sphere::<Complex64, _>(30, &mut rng).unwrap();
            assert_eq!(p.regions().iter().filter(|r| r.contains(x.as_slice())).count(), 1);
        }
        assert!(matches!(equal_measure_bands::<f64>(MAX_BANDS + 1, 3), Err(Error::Convergence(_))));
    }
}
