//! Runs an [`ExperimentSpec`] and collects results and checks.

use std::time::Instant;

use num_complex::Complex64;
use sphereonb::covariance::{cov_pair_mc, covariance_exact};
use sphereonb::exact::{
    alpha, beta, complex_monomial_moment, rational_to_f64, real_monomial_moment, sphere_surface_area, ExponentVector,
};
use sphereonb::polynomial::SpherePolynomial;
use sphereonb::radon::{gap_label, verify_eigenvalue, EigenvalueTable, MIN_THEOREM_DIM, SIGMA_BAND};
use sphereonb::uniformity::{
    equal_measure_bands, run_partition_trial, run_region_trials, run_test_function_trial, Hypothesis, TrialConfig,
    TrialReport,
};
use sphereonb::{FieldTag, RngStream, Scalar};

use crate::region::parse_region;
use crate::report::{Check, RunManifest};
use crate::spec::{
    Command, CovarianceParams, ExperimentSpec, MomentsParams, RadonParams, SpectrumParams, TrialParams,
};
use crate::CliError;

pub fn run_spec(spec: ExperimentSpec) -> Result<RunManifest, CliError> {
    let start = Instant::now();
    let seed = spec.seed;
    let mut m = RunManifest::new(spec.clone());
    let need_seed = || seed.ok_or_else(|| CliError::invalid("seed", "required for this subcommand"));
    match &spec.command {
        Command::Moments(p) => moments(p, &mut m)?,
        Command::Spectrum(p) => spectrum(p, &mut m)?,
        Command::RadonVerify(p) => radon(p, need_seed()?, &mut m)?,
        Command::Covariance(p) => match p.field {
            FieldTag::Real => covariance::<f64>(p, need_seed()?, &mut m)?,
            FieldTag::Complex => covariance::<Complex64>(p, need_seed()?, &mut m)?,
        },
        Command::Uniformity(p) => {
            let cfg = trial_config(&p.trial, need_seed()?)?;
            let reports = match cfg.field {
                FieldTag::Real => region_reports::<f64>(&cfg, &p.regions)?,
                FieldTag::Complex => region_reports::<Complex64>(&cfg, &p.regions)?,
            };
            for (name, r) in p.regions.iter().zip(&reports) {
                trial_results(name, r, &mut m);
            }
            m.details = serde_json::to_value(&reports)?;
        }
        Command::Partition(p) => {
            let cfg = trial_config(&p.trial, need_seed()?)?;
            let report = match cfg.field {
                FieldTag::Real => run_partition_trial(&cfg, &equal_measure_bands::<f64>(p.bands, cfg.dim)?)?,
                FieldTag::Complex => run_partition_trial(&cfg, &equal_measure_bands::<Complex64>(p.bands, cfg.dim)?)?,
            };
            trial_results(&format!("bands={}", p.bands), &report, &mut m);
            m.details = serde_json::to_value(&report)?;
        }
        Command::Testfn(p) => {
            let cfg = trial_config(&p.trial, need_seed()?)?;
            let phi = SpherePolynomial::parse(&p.function, cfg.field, cfg.dim)?;
            let report = run_test_function_trial(&cfg, &phi)?;
            m.results.float("variance", phi.variance());
            trial_results(&p.function, &report, &mut m);
            m.details = serde_json::to_value(&report)?;
        }
    }
    m.duration_seconds = start.elapsed().as_secs_f64();
    Ok(m)
}

fn moments(p: &MomentsParams, m: &mut RunManifest) -> Result<(), CliError> {
    if p.alpha.is_empty() && p.beta.is_empty() && p.monomial.is_empty() && p.surface_area.is_empty() {
        return Err(CliError::invalid(
            "moments",
            "nothing requested; use --alpha, --beta, --monomial or --surface-area",
        ));
    }
    for &(l, d) in &p.alpha {
        let v = alpha(l, d)?;
        let name = format!("alpha({l},{d})");
        m.results.float(name.clone(), rational_to_f64(&v));
        m.results.exact(name, v);
    }
    for &(l, d) in &p.beta {
        let v = beta(l, d)?;
        let name = format!("beta({l},{d})");
        m.results.float(name.clone(), rational_to_f64(&v));
        m.results.exact(name, v);
    }
    for exps in &p.monomial {
        let n = ExponentVector::new(exps.clone());
        let v = match p.field {
            FieldTag::Real => real_monomial_moment(&n)?,
            FieldTag::Complex => complex_monomial_moment(&n)?,
        };
        let name = format!("moment[{}]({})", p.field, n);
        m.results.float(name.clone(), rational_to_f64(&v));
        m.results.exact(name, v);
    }
    for &n in &p.surface_area {
        let s = sphere_surface_area(n)?;
        let name = format!("surface_area({n})");
        m.results.float(name.clone(), s.value);
        m.results
            .exact(name, format!("2^{} pi^{} / {}", s.two_power, s.pi_power, s.double_factorial));
    }
    Ok(())
}

fn label_name(field: FieldTag, (l, lp): (u32, u32)) -> String {
    match field {
        FieldTag::Real => format!("tau({l})"),
        FieldTag::Complex => format!("tau({l},{lp})"),
    }
}

fn spectrum(p: &SpectrumParams, m: &mut RunManifest) -> Result<(), CliError> {
    let table = EigenvalueTable::build(p.field, p.dim, p.max_degree)?;
    for (&label, tau) in &table.entries {
        let name = label_name(p.field, label);
        m.results.float(name.clone(), rational_to_f64(tau));
        m.results.exact(name, tau);
    }
    let gap = 1.0 / (p.dim as f64 - 1.0);
    m.results.exact("spectral_gap", format!("1/{}", p.dim - 1));
    if p.dim < MIN_THEOREM_DIM {
        return Ok(());
    }
    let gl = gap_label(p.field);
    if let Some(tau) = table.entries.get(&gl) {
        let observed = rational_to_f64(tau).abs();
        let exact = *tau == -sphereonb::exact::reciprocal(p.dim - 1);
        m.checks.push(Check {
            name: format!("|{}| = 1/(d-1)", label_name(p.field, gl)),
            pass: exact,
            observed,
            bound: gap,
        });
    }
    let others = table
        .entries
        .iter()
        .filter(|(l, _)| **l != (0, 0) && **l != gl)
        .map(|(_, t)| rational_to_f64(t).abs())
        .fold(None, |acc: Option<f64>, t| Some(acc.map_or(t, |a| a.max(t))));
    if let Some(max_other) = others {
        m.checks.push(Check {
            name: "max |tau| over other nonconstant degrees < 1/(d-1)".into(),
            pass: max_other < gap,
            observed: max_other,
            bound: gap,
        });
    }
    Ok(())
}

fn radon(p: &RadonParams, seed: u64, m: &mut RunManifest) -> Result<(), CliError> {
    let mut rng = RngStream::from_seed(seed).rng();
    let r = verify_eigenvalue(p.label, p.dim, p.field, p.samples, p.points, &mut rng)?;
    let name = label_name(p.field, p.label);
    m.results.exact(name.clone(), &r.tau);
    m.results.float(name, r.tau_f64);
    m.results.estimate("pooled_ratio", r.pooled);
    for (i, pt) in r.points.iter().enumerate() {
        m.results.estimate(format!("ratio[{i}]"), pt.ratio);
        m.checks.push(Check::at_most(format!("ratio[{i}] z-score against closed form"), pt.z_score, SIGMA_BAND));
    }
    if r.points.len() > 1 {
        m.checks.push(Check::at_most("max pairwise z between points", r.max_pairwise_z, SIGMA_BAND));
    }
    m.details = serde_json::to_value(&r)?;
    Ok(())
}

fn covariance<S: Scalar>(p: &CovarianceParams, seed: u64, m: &mut RunManifest) -> Result<(), CliError> {
    let phi = SpherePolynomial::parse(&p.function, p.field, p.dim)?;
    let r = cov_pair_mc::<S, _>(&phi, p.bases, p.pair, RngStream::from_seed(seed))?;
    m.results.float("variance", r.exact_variance);
    m.results.float("bound", r.bound);
    m.results.estimate("covariance", r.covariance);
    if let Some(s) = r.sharpness_ratio {
        m.results.estimate("sharpness_ratio", s);
    }
    m.checks.push(Check::at_most(
        "|cov| <= Var/(d-1) + 4 stderr",
        r.covariance.value.abs(),
        r.bound + SIGMA_BAND * r.covariance.std_error,
    ));
    if let Ok(exact) = covariance_exact(&phi) {
        m.results.float("covariance_exact", exact);
        m.checks.push(Check::at_most(
            "covariance z-score against exact value",
            r.covariance.z_score(exact),
            SIGMA_BAND,
        ));
    }
    m.details = serde_json::to_value(&r)?;
    Ok(())
}

fn trial_config(p: &TrialParams, seed: u64) -> Result<TrialConfig, CliError> {
    let cfg = TrialConfig::new(p.dim, p.field, p.delta, p.epsilon, p.trials, seed).with_mode(p.mode);
    cfg.validate()?;
    Ok(cfg)
}

fn region_reports<S: Scalar>(cfg: &TrialConfig, specs: &[String]) -> Result<Vec<TrialReport>, CliError> {
    let regions = specs
        .iter()
        .map(|s| parse_region::<S>(s, cfg.dim))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(run_region_trials(cfg, &regions)?)
}

fn hypothesis_name(h: Hypothesis) -> String {
    match h {
        Hypothesis::Region => "d >= 1/(delta^2 eps)".into(),
        Hypothesis::Partition(k) => format!("d >= {k}/(delta^2 eps)"),
        Hypothesis::TestFunction => "d >= 2/(delta^2 eps)".into(),
    }
}

fn trial_results(label: &str, r: &TrialReport, m: &mut RunManifest) {
    let key = |s: &str| format!("{s}[{label}]");
    m.results.float(key("failure_rate"), r.failure_rate);
    m.results.float(key("wilson_lower"), r.wilson_95.0);
    m.results.float(key("wilson_upper"), r.wilson_95.1);
    m.results.float(key("chebyshev_bound"), r.chebyshev_bound);
    m.results.exact(key("failures"), format!("{}/{}", r.failure_count, r.n_trials));
    for (i, c) in r.per_cell.iter().enumerate() {
        let cell = if r.per_cell.len() > 1 { format!("{label}#{i}") } else { label.to_string() };
        m.results.float(format!("target[{cell}]"), c.target);
        m.results.estimate(format!("mean[{cell}]"), c.mean_fraction);
        m.checks.push(Check::at_most(
            format!("mean over trials z-score against target [{cell}]"),
            c.mean_fraction.z_score(c.target),
            SIGMA_BAND,
        ));
    }
    if r.hypothesis.met {
        m.checks.push(Check::at_most(
            format!("wilson_upper <= epsilon given {} [{label}]", hypothesis_name(r.hypothesis.kind)),
            r.wilson_95.1,
            r.epsilon,
        ));
    }
    if r.dim >= 4 {
        let p = r.chebyshev_bound;
        let slack = SIGMA_BAND * (p * (1.0 - p) / r.n_trials as f64).sqrt();
        m.checks.push(Check::at_most(
            format!("failure_rate <= chebyshev_bound + 4 sigma [{label}]"),
            r.failure_rate,
            p + slack,
        ));
    }
}
