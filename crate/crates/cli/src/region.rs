//! Region strings such as `cap:measure=0.3` or `not:band:low=-0.1,high=0.2`.
//! Every axial region is taken around the first coordinate axis.

use sphereonb::uniformity::{real_cap_height, TestRegion};
use sphereonb::{FieldTag, Scalar};

use crate::CliError;

fn e1<S: Scalar>(dim: usize) -> Vec<S> {
    let mut v = vec![S::zero(); dim];
    if let Some(first) = v.first_mut() {
        *first = S::one();
    }
    v
}

fn key_values(spec: &str, body: &str) -> Result<Vec<(String, f64)>, CliError> {
    body.split(',')
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::invalid("region", format!("expected key=value in `{spec}`")))?;
            let v = v
                .trim()
                .parse()
                .map_err(|_| CliError::invalid("region", format!("`{v}` is not a number in `{spec}`")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

fn one_key(spec: &str, kv: &[(String, f64)]) -> Result<(String, f64), CliError> {
    match kv {
        [single] => Ok(single.clone()),
        _ => Err(CliError::invalid("region", format!("`{spec}` takes exactly one parameter"))),
    }
}

fn get(spec: &str, kv: &[(String, f64)], key: &str) -> Result<f64, CliError> {
    kv.iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| CliError::invalid("region", format!("`{spec}` is missing `{key}`")))
}

/// `|<e_1, x>|^2 > c` with measure `u`: `(1-c)^{d-1} = u` on `S(C^d)`,
/// `2 u(x_1 > sqrt c) = u` on `S(R^d)`.
fn level_for_measure(field: FieldTag, dim: usize, u: f64) -> Result<f64, CliError> {
    if !(0.0..=1.0).contains(&u) {
        return Err(CliError::invalid("region", format!("measure {u} is outside [0, 1]")));
    }
    Ok(match field {
        FieldTag::Complex => {
            if dim < 2 {
                return Err(CliError::invalid("region", "complex caps need d >= 2"));
            }
            1.0 - u.powf(1.0 / (dim as f64 - 1.0))
        }
        FieldTag::Real => real_cap_height(dim, u / 2.0)?.max(0.0).powi(2),
    })
}

pub fn parse_region<S: Scalar>(spec: &str, dim: usize) -> Result<TestRegion<S>, CliError> {
    if let Some(rest) = spec.strip_prefix("not:") {
        return Ok(parse_region::<S>(rest, dim)?.complement());
    }
    let (kind, body) = spec.split_once(':').unwrap_or((spec, ""));
    let kv = if body.is_empty() { Vec::new() } else { key_values(spec, body)? };
    let region = match kind.trim() {
        "sphere" if kv.is_empty() => TestRegion::sphere(dim),
        "halfspace" if kv.is_empty() => TestRegion::halfspace(e1(dim))?,
        "cap" => match one_key(spec, &kv)? {
            (k, u) if k == "measure" => TestRegion::real_cap_with_measure(dim, u)?,
            (k, t) if k == "height" => TestRegion::real_cap(e1(dim), t)?,
            (k, _) => return Err(CliError::invalid("region", format!("unknown cap parameter `{k}`"))),
        },
        "ccap" => match one_key(spec, &kv)? {
            (k, c) if k == "level" => TestRegion::complex_cap(e1(dim), c)?,
            (k, u) if k == "measure" => TestRegion::complex_cap(e1(dim), level_for_measure(S::FIELD, dim, u)?)?,
            (k, _) => return Err(CliError::invalid("region", format!("unknown ccap parameter `{k}`"))),
        },
        "band" => TestRegion::band(e1(dim), get(spec, &kv, "low")?, get(spec, &kv, "high")?)?,
        _ => return Err(CliError::invalid("region", format!("unrecognised region `{spec}`"))),
    };
    Ok(region)
}
