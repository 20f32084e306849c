//! Run manifests and their JSON/CSV serializations.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::spec::{ExperimentSpec, Format};
use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Results {
    /// Exact rationals as `num/den` strings.
    pub exact_values: BTreeMap<String, String>,
    pub float_values: BTreeMap<String, f64>,
    pub stderr_values: BTreeMap<String, f64>,
}

impl Results {
    pub fn is_empty(&self) -> bool {
        self.exact_values.is_empty() && self.float_values.is_empty() && self.stderr_values.is_empty()
    }

    pub fn exact(&mut self, name: impl Into<String>, value: impl ToString) {
        self.exact_values.insert(name.into(), value.to_string());
    }

    pub fn float(&mut self, name: impl Into<String>, value: f64) {
        self.float_values.insert(name.into(), value);
    }

    pub fn estimate(&mut self, name: impl Into<String>, e: sphereonb::stats::Estimate) {
        let name = name.into();
        self.stderr_values.insert(name.clone(), e.std_error);
        self.float_values.insert(name, e.value);
    }
}

/// One pass/fail comparison against a bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    /// What is compared, e.g. `wilson_upper <= epsilon`.
    pub name: String,
    pub pass: bool,
    pub observed: f64,
    pub bound: f64,
}

impl Check {
    /// `observed <= bound`.
    pub fn at_most(name: impl Into<String>, observed: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            pass: observed <= bound,
            observed,
            bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub spec: ExperimentSpec,
    pub duration_seconds: f64,
    pub results: Results,
    pub checks: Vec<Check>,
    /// Full module report (trial report, eigenvalue report, ...), if any.
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub details: serde_json::Value,
}

impl RunManifest {
    pub fn new(spec: ExperimentSpec) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            spec,
            duration_seconds: 0.0,
            results: Results::default(),
            checks: Vec::new(),
            details: serde_json::Value::Null,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

#[derive(Serialize)]
struct CsvRow<'a> {
    section: &'static str,
    name: &'a str,
    value: String,
    std_error: Option<f64>,
    pass: Option<bool>,
    bound: Option<f64>,
}

pub fn emit_report<W: Write>(manifest: &RunManifest, format: Format, out: W) -> Result<(), CliError> {
    match format {
        Format::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, manifest)?;
            writeln!(out)?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            let r = &manifest.results;
            for (name, v) in &r.exact_values {
                w.serialize(CsvRow {
                    section: "exact",
                    name,
                    value: v.clone(),
                    std_error: None,
                    pass: None,
                    bound: None,
                })?;
            }
            for (name, v) in &r.float_values {
                w.serialize(CsvRow {
                    section: "float",
                    name,
                    value: v.to_string(),
                    std_error: r.stderr_values.get(name).copied(),
                    pass: None,
                    bound: None,
                })?;
            }
            for c in &manifest.checks {
                w.serialize(CsvRow {
                    section: "check",
                    name: &c.name,
                    value: c.observed.to_string(),
                    std_error: None,
                    pass: Some(c.pass),
                    bound: Some(c.bound),
                })?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::{Command, MomentsParams};

    fn manifest() -> RunManifest {
        RunManifest::new(ExperimentSpec {
            command: Command::Moments(MomentsParams::default()),
            seed: None,
            output_path: None,
            format: Format::Json,
        })
    }

    #[test]
    fn empty_report_is_valid_json() {
        let mut buf = Vec::new();
        emit_report(&manifest(), Format::Json, &mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["results"]["exact_values"], serde_json::json!({}));
        assert_eq!(v["checks"], serde_json::json!([]));
        let back: RunManifest = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back, manifest());
    }

    #[test]
    fn rationals_stay_strings() {
        let mut m = manifest();
        m.results.exact("third", "1/3");
        m.results.float("third", 1.0 / 3.0);
        let mut buf = Vec::new();
        emit_report(&m, Format::Json, &mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["results"]["exact_values"]["third"], "1/3");
        let mut csv_buf = Vec::new();
        emit_report(&m, Format::Csv, &mut csv_buf).unwrap();
        let text = String::from_utf8(csv_buf).unwrap();
        assert!(text.starts_with("section,name,value,std_error,pass,bound\n"));
        assert!(text.contains("exact,third,1/3,,,\n"), "{text}");
    }
}
