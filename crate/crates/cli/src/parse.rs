//! Parsers for the compact `kind:value` flag syntax.

use fading_ms_core::channel::{Atom, FadingDistribution};
use fading_ms_core::codec::VarianceTracking;

use crate::CliError;

fn number(text: &str, what: &str) -> Result<f64, CliError> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("{what}: `{text}` is not a number")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("{what}: `{text}` is not finite")))
    }
}

pub fn float_list(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    if text.trim().is_empty() {
        return Err(CliError::Usage(format!("{what}: empty list")));
    }
    text.split(',').map(|t| number(t, what)).collect()
}

/// `bernoulli:<ε>`, `point:<g>` or `atoms:<g:p,...>`.
pub fn distribution(spec: &str) -> Result<FadingDistribution, CliError> {
    let (kind, rest) = spec
        .split_once(':')
        .ok_or_else(|| CliError::Usage(format!("--dist `{spec}`: expected <kind>:<value>")))?;
    let dist = match kind {
        "bernoulli" => FadingDistribution::bernoulli(number(rest, "--dist bernoulli")?),
        "point" => FadingDistribution::point_mass(number(rest, "--dist point")?),
        "atoms" => {
            let atoms = rest
                .split(',')
                .map(|pair| {
                    let (g, p) = pair
                        .split_once(':')
                        .ok_or_else(|| CliError::Usage(format!("--dist atoms: `{pair}` is not <g>:<p>")))?;
                    Ok(Atom { gain: number(g, "--dist atoms gain")?, prob: number(p, "--dist atoms probability")? })
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            FadingDistribution::new(atoms)
        }
        other => return Err(CliError::Usage(format!("--dist: unknown kind `{other}`"))),
    };
    dist.map_err(|e| CliError::Usage(format!("--dist: {e}")))
}

/// Diagonal entries from `scalar:<λ>` or `diag:<λ1,λ2,...>`.
pub fn plant(spec: &str) -> Result<Vec<f64>, CliError> {
    match spec.split_once(':') {
        Some(("scalar", v)) => Ok(vec![number(v, "--plant scalar")?]),
        Some(("diag", v)) => float_list(v, "--plant diag"),
        _ => Err(CliError::Usage(format!("--plant `{spec}`: expected scalar:<λ> or diag:<λ1,...>"))),
    }
}

/// `tau:<τ>`.
pub fn schedule_period(spec: &str) -> Result<usize, CliError> {
    spec.strip_prefix("tau:")
        .and_then(|t| t.trim().parse::<usize>().ok())
        .filter(|t| *t > 0)
        .ok_or_else(|| CliError::Usage(format!("--schedule `{spec}`: expected tau:<positive integer>")))
}

/// `start:stop:step`.
pub fn grid(spec: &str) -> Result<(f64, f64, f64), CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Usage(format!("--eps-grid `{spec}`: expected start:stop:step")));
    }
    Ok((number(parts[0], "--eps-grid")?, number(parts[1], "--eps-grid")?, number(parts[2], "--eps-grid")?))
}

pub fn tracking(spec: &str) -> Result<VarianceTracking, CliError> {
    match spec {
        "realized" => Ok(VarianceTracking::Realized),
        "averaged" => Ok(VarianceTracking::Averaged),
        other => Err(CliError::Usage(format!("--tracking: unknown mode `{other}`"))),
    }
}

/// A single value broadcasts to every coordinate.
pub fn broadcast(values: Vec<f64>, n: usize, what: &str) -> Result<Vec<f64>, CliError> {
    match values.len() {
        1 => Ok(vec![values[0]; n]),
        len if len == n => Ok(values),
        len => Err(CliError::Usage(format!("{what}: {len} entries for a {n}-state plant"))),
    }
}
