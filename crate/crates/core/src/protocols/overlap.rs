use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{Axis, RunResult};
use crate::error::{Error, Result};
use crate::evolve::ground_state;
use crate::fock::FockBasis;
use crate::lattice::{chain_geometry, uniform_chain_geometry};
use crate::operators::{bond_hopping, chain_hop};
use crate::oracles::uniform_overlap;

/// Overlap between the hard-core ground states of the engineered and the
/// uniform chain, at fixed filling.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OverlapParams {
    pub lens: Vec<usize>,
    pub filling: f64,
    /// Lengths up to this value are also checked against exact diagonalization.
    pub ed_max_len: usize,
}

impl Default for OverlapParams {
    fn default() -> Self {
        Self { lens: vec![2, 4, 8, 16, 32, 64, 128, 256, 512, 1024, 2000], filling: 0.5, ed_max_len: 12 }
    }
}

fn particles_for(len: usize, filling: f64) -> usize {
    ((len as f64 * filling).round() as usize).clamp(1, len)
}

/// `|⟨ψ_X|ψ_u⟩|²` by exact diagonalization of both hard-core sectors.
pub fn uniform_overlap_ed(len: usize, particles: usize) -> Result<f64> {
    let basis = |uniform: bool| -> Result<Arc<FockBasis>> {
        let geometry = if uniform { uniform_chain_geometry(len)? } else { chain_geometry(len)? };
        Ok(Arc::new(FockBasis::new(Arc::new(geometry), particles, 1)?))
    };
    let (bx, bu) = (basis(false)?, basis(true)?);
    let (_, gx) = ground_state(&chain_hop(&bx)?)?;
    let (_, gu) = ground_state(&bond_hopping(&bu, &vec![1.0; len - 1], "uniform")?)?;
    Ok(gx.amps.iter().zip(&gu.amps).map(|(a, b)| a.conj() * b).sum::<Complex64>().norm_sqr())
}

pub fn uniform_overlap_scan(p: &OverlapParams) -> Result<RunResult> {
    if p.lens.is_empty() || p.lens.iter().any(|&l| l < 2) {
        return Err(Error::Parameter("lengths must be at least 2".into()));
    }
    if !(p.filling > 0.0 && p.filling <= 1.0) {
        return Err(Error::Parameter(format!("filling must lie in (0, 1], got {}", p.filling)));
    }
    let start = Instant::now();
    let values: Vec<(f64, Option<f64>)> = p
        .lens
        .par_iter()
        .map(|&len| {
            let n = particles_for(len, p.filling);
            let det = uniform_overlap(len, n)?;
            let ed = (len <= p.ed_max_len).then(|| uniform_overlap_ed(len, n)).transpose()?;
            Ok((det, ed))
        })
        .collect::<Result<_>>()?;

    let lens: Vec<f64> = p.lens.iter().map(|&l| l as f64).collect();
    let mut result = RunResult::new("uniform_overlap", vec![Axis::new("L", "", lens)], &["N", "overlap"]);
    let mut checks = Vec::new();
    let mut worst = 0.0f64;
    for (&len, (det, ed)) in p.lens.iter().zip(&values) {
        let n = particles_for(len, p.filling);
        result.push(&[len as f64], &[n as f64, *det]);
        if let Some(e) = ed {
            worst = worst.max((det - e).abs());
            checks.push(json!({ "L": len, "N": n, "determinant": det, "ed": e, "deviation": (det - e).abs() }));
        }
    }
    result.meta("parameters", p);
    result.meta("ed_cross_check", checks);
    result.meta("wall_time_s", start.elapsed().as_secs_f64());
    result.summarize("max_ed_deviation", worst);
    result.summarize("min_overlap", values.iter().map(|v| v.0).fold(f64::INFINITY, f64::min));
    result.validate()?;
    Ok(result)
}
