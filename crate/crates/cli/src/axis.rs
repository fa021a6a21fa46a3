//! Sweep-axis strings: comma-separated items, each a number, `inf`, or a
//! range `a..b[:n]`.

use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    /// Geometric spacing; falls back to linear when an endpoint is not positive.
    Log,
}

fn number(s: &str) -> Result<f64, String> {
    match s.trim() {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        t => t.parse::<f64>().map_err(|_| format!("not a number: {t:?}")),
    }
}

/// Parses an axis; a range without `:n` gets `default_points` samples.
pub fn parse_axis(text: &str, spacing: Spacing, default_points: usize) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let Some((a, rest)) = item.split_once("..") else {
            out.push(number(item)?);
            continue;
        };
        let (b, n) = match rest.split_once(':') {
            Some((b, n)) => (b, n.trim().parse::<usize>().map_err(|_| format!("bad point count in {item:?}"))?),
            None => (rest, default_points),
        };
        let (a, b) = (number(a)?, number(b)?);
        if !a.is_finite() || !b.is_finite() || n == 0 {
            return Err(format!("range {item:?} needs finite endpoints and at least one point"));
        }
        let log = spacing == Spacing::Log && a > 0.0 && b > 0.0;
        out.extend(match (log, n) {
            (_, 1) => vec![a],
            (true, _) => (0..n).map(|k| (a.ln() + (b.ln() - a.ln()) * k as f64 / (n - 1) as f64).exp()).collect::<Vec<_>>(),
            (false, _) => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
        });
    }
    if out.is_empty() {
        return Err("empty axis".into());
    }
    if out.iter().any(|v| v.is_nan()) {
        return Err("axis contains NaN".into());
    }
    Ok(out)
}

/// Same as [`parse_axis`] with every value multiplied by `π`.
pub fn parse_angles_over_pi(text: &str, default_points: usize) -> Result<Vec<f64>, String> {
    Ok(parse_axis(text, Spacing::Linear, default_points)?.into_iter().map(|v| v * PI).collect())
}

pub fn parse_value(text: &str) -> Result<f64, String> {
    let v = number(text)?;
    if v.is_nan() {
        return Err("NaN is not allowed".into());
    }
    Ok(v)
}
