use num_bigint::BigUint;
use num_complex::Complex64;
use num_rational::BigRational;
use proptest::prelude::*;

use sphereonb::exact::{
    alpha, beta, beta_via_hypergeometric_sum, double_factorial, real_monomial_moment, ExponentVector,
};
use sphereonb::field::norm2;
use sphereonb::polynomial::SpherePolynomial;
use sphereonb::radon::{apply_radon_exact, radon_eigenvalue, random_harmonic};
use sphereonb::sphere::{haar_random_onb, haar_random_rotation, sample_uniform_sphere, OnbMethod};
use sphereonb::stats::wilson_interval;
use sphereonb::uniformity::{equal_measure_bands, real_cap_measure};
use sphereonb::{FieldTag, RngStream};

fn field() -> impl Strategy<Value = FieldTag> {
    prop_oneof![Just(FieldTag::Real), Just(FieldTag::Complex)]
}

/// Real polynomial in `x1..x3` from up to four terms.
fn real_polynomial(dim: usize) -> impl Strategy<Value = SpherePolynomial> {
    prop::collection::vec((-3i32..=3, 0u32..=3, 0u32..=2, 0u32..=2), 1..=4).prop_map(move |terms| {
        let text = terms
            .iter()
            .map(|(c, a, b, e)| format!("({c})*x1^{a}*x2^{b}*x3^{e}"))
            .collect::<Vec<_>>()
            .join(" + ");
        SpherePolynomial::parse(&text, FieldTag::Real, dim).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn double_factorial_recursion(n in 1i64..200) {
        let lhs = double_factorial(n).unwrap();
        let rhs = BigUint::from(n as u64) * double_factorial(n - 2).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn alpha_step(l in (0u64..40).prop_map(|l| 2 * l), d in 2u64..60) {
        let ratio = BigRational::new(((l + 1) as i64).into(), ((l + d) as i64).into());
        prop_assert_eq!(alpha(l + 2, d).unwrap(), alpha(l, d).unwrap() * ratio);
    }

    #[test]
    fn beta_routes_agree(l in 0u64..30, d in 1u64..40) {
        prop_assert_eq!(beta(l, d).unwrap(), beta_via_hypergeometric_sum(l, d).unwrap());
    }

    #[test]
    fn monomial_moment_symmetries(e in prop::collection::vec(0u32..5, 1..6), shift in 0usize..6) {
        let m = real_monomial_moment(&ExponentVector::new(e.clone())).unwrap();
        let mut rotated = e.clone();
        rotated.rotate_left(shift % e.len());
        prop_assert_eq!(&m, &real_monomial_moment(&ExponentVector::new(rotated)).unwrap());
        if e.iter().any(|k| k % 2 == 1) {
            prop_assert_eq!(m, BigRational::from_integer(0.into()));
        }
    }

    #[test]
    fn sphere_points_are_unit(seed: u64, dim in 1usize..64, f in field()) {
        let mut rng = RngStream::from_seed(seed).rng();
        let n = match f {
            FieldTag::Real => norm2(sample_uniform_sphere::<f64, _>(dim, &mut rng).unwrap().as_slice()),
            FieldTag::Complex => norm2(sample_uniform_sphere::<Complex64, _>(dim, &mut rng).unwrap().as_slice()),
        };
        prop_assert!((n - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bases_are_orthonormal_and_reproducible(seed: u64, dim in 1usize..24, sequential: bool) {
        let method = if sequential { OnbMethod::Sequential } else { OnbMethod::QrGaussian };
        let stream = RngStream::new(seed, 3);
        let a = haar_random_onb::<Complex64, _>(dim, &mut stream.rng(), method).unwrap();
        let b = haar_random_onb::<Complex64, _>(dim, &mut stream.rng(), method).unwrap();
        prop_assert!(a.orthonormality_defect() < 1e-10);
        prop_assert!(a.vectors().zip(b.vectors()).all(|(x, y)| x == y));
    }

    #[test]
    fn harmonic_split_is_harmonic(p in real_polynomial(5)) {
        for (_, component) in p.homogeneous_components() {
            let (h, _) = component.harmonic_split().unwrap();
            prop_assert!(h.laplacian().max_abs_coefficient() < 1e-9 * component.max_abs_coefficient().max(1.0));
        }
    }

    #[test]
    fn sphere_average_is_rotation_invariant(p in real_polynomial(4), seed: u64) {
        let q = haar_random_rotation::<f64, _>(4, &mut RngStream::from_seed(seed).rng()).unwrap();
        let rotated = p.compose_adjoint(&q);
        let (a, b) = (p.sphere_average().re, rotated.sphere_average().re);
        prop_assert!((a - b).abs() < 1e-9 * p.max_abs_coefficient().max(1.0), "{} vs {}", a, b);
    }

    #[test]
    fn radon_scales_harmonics(seed: u64, l in 1u32..5, dim in 4usize..8) {
        let mut rng = RngStream::from_seed(seed).rng();
        let h = random_harmonic(FieldTag::Real, (l, 0), dim, &mut rng).unwrap();
        let tau = radon_eigenvalue(FieldTag::Real, (l, 0), dim as u64).unwrap().to_f64();
        let diff = &apply_radon_exact(&h).unwrap() - &h.scale_real(tau);
        prop_assert!(diff.max_abs_coefficient() < 1e-9 * h.max_abs_coefficient().max(1.0));
    }

    #[test]
    fn wilson_contains_estimate(n in 1u64..5000, frac in 0.0f64..=1.0) {
        let k = (frac * n as f64).round() as u64;
        let (lo, hi) = wilson_interval(k, n, 1.96);
        let p = k as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
    }

    #[test]
    fn cap_measure_reflects_and_decreases(n in 2usize..400, t in -1.0f64..1.0, dt in 0.0f64..0.5) {
        let u = real_cap_measure(n, t);
        prop_assert!((u + real_cap_measure(n, -t) - 1.0).abs() < 1e-12);
        prop_assert!(real_cap_measure(n, (t + dt).min(1.0)) <= u + 1e-15);
    }

    #[test]
    fn bands_tile_the_sphere(m in 1usize..12, d in 2usize..300) {
        let p = equal_measure_bands::<f64>(m, d).unwrap();
        prop_assert_eq!(p.len(), m);
        prop_assert!(p.measures().iter().all(|u| (u - 1.0 / m as f64).abs() < 1e-9));
    }
}
