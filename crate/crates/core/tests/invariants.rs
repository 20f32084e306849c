//! Statistical invariants that cut across modules.

use sphereonb::covariance::cov_pair_mc;
use sphereonb::polynomial::SpherePolynomial;
use sphereonb::radon::{apply_radon_mc, radon_eigenvalue, random_harmonic};
use sphereonb::sphere::{haar_random_rotation, sample_orthonormal_frame, sample_uniform_sphere};
use sphereonb::stats::{two_sample_z, Estimate, Moments};
use sphereonb::uniformity::{run_uniformity_trial, TestRegion, TrialConfig, TrialMode};
use sphereonb::{FieldTag, RngStream};

const SIGMA: f64 = 4.0;

#[test]
fn covariance_is_exchangeable() {
    let phi = SpherePolynomial::parse("x1^2 + x2", FieldTag::Real, 10).unwrap();
    let a = cov_pair_mc::<f64, _>(&phi, 20_000, (0, 1), RngStream::from_seed(1)).unwrap();
    let b = cov_pair_mc::<f64, _>(&phi, 20_000, (2, 6), RngStream::from_seed(2)).unwrap();
    let z = two_sample_z(a.covariance, b.covariance);
    assert!(z <= SIGMA, "{:?} vs {:?}", a.covariance, b.covariance);
}

#[test]
fn each_basis_vector_has_the_uniform_marginal() {
    let d = 8;
    let phi = SpherePolynomial::parse("x1^2 - x2*x3", FieldTag::Real, d).unwrap();
    let mean = phi.sphere_average().re;
    let stream = RngStream::from_seed(3);
    let values: Vec<f64> = (0..20_000)
        .map(|k| {
            let frame = sample_orthonormal_frame::<f64, _>(d, 4, &mut stream.trial(k).rng()).unwrap();
            phi.eval_real(&frame[3])
        })
        .collect();
    let m: Moments = values.iter().copied().collect();
    assert!(m.estimate().within_sigma(mean, SIGMA));
    let sq: Moments = values.iter().map(|v| (v - mean).powi(2)).collect();
    assert!(sq.estimate().within_sigma(phi.variance(), SIGMA), "{:?} vs {}", sq.estimate(), phi.variance());
}

#[test]
fn eigenvalue_ratio_survives_pre_rotation() {
    let d = 6;
    let mut rng = RngStream::from_seed(4).rng();
    let p = random_harmonic(FieldTag::Real, (2, 0), d, &mut rng).unwrap();
    let q = haar_random_rotation::<f64, _>(d, &mut rng).unwrap();
    let rotated = p.compose_adjoint(&q);
    let tau = radon_eigenvalue(FieldTag::Real, (2, 0), d as u64).unwrap().to_f64();
    // a point where the rotated polynomial is far from zero
    let x = (0..500)
        .map(|_| sample_uniform_sphere::<f64, _>(d, &mut rng).unwrap())
        .max_by(|a, b| rotated.eval_real(a.as_slice()).abs().total_cmp(&rotated.eval_real(b.as_slice()).abs()))
        .unwrap();
    let px = rotated.eval_real(x.as_slice());
    let t = apply_radon_mc(&rotated, &x, 50_000, &mut rng).unwrap();
    let ratio = Estimate::new(t.value / px, t.std_error / px.abs());
    assert!(ratio.within_sigma(tau, SIGMA), "{ratio:?} vs {tau}");
}

#[test]
fn trial_modes_agree_on_a_small_grid() {
    let d = 60;
    for (k, u) in [0.2, 0.5].into_iter().enumerate() {
        let cap = TestRegion::<f64>::real_cap_with_measure(d, u).unwrap();
        let base = TrialConfig::new(d, FieldTag::Real, 0.05, 0.25, 300, 10 + k as u64);
        let a = run_uniformity_trial(&base, &cap).unwrap();
        let b = run_uniformity_trial(
            &TrialConfig {
                seed: 20 + k as u64,
                ..base.with_mode(TrialMode::FixedBasisRandomRotation)
            },
            &cap,
        )
        .unwrap();
        let rate = |r: &sphereonb::uniformity::TrialReport| {
            Estimate::new(r.failure_rate, (r.failure_rate * (1.0 - r.failure_rate) / r.n_trials as f64).sqrt())
        };
        assert!(two_sample_z(rate(&a), rate(&b)) <= SIGMA, "{} vs {}", a.failure_rate, b.failure_rate);
        assert!(two_sample_z(a.per_cell[0].mean_fraction, b.per_cell[0].mean_fraction) <= SIGMA);
        assert!(a.per_cell[0].mean_fraction.within_sigma(u, SIGMA));
        assert!(b.per_cell[0].mean_fraction.within_sigma(u, SIGMA));
    }
}
