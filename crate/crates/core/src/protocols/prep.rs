use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{drift, Axis, InitialState, RunResult};
use crate::error::{Error, Result};
use crate::evolve::{evolve_schedule, ground_state, EvolutionConfig, SegmentReport};
use crate::fock::{FockBasis, HardcoreSites, StateVector, DEFAULT_DIMENSION_CAP};
use crate::lattice::{chain_geometry, triangular_geometry, Geometry, GeometryKind};
use crate::pulses::{standard_prep_schedule, PrepOperators, PrepParams};

/// Fidelity-versus-interaction sweep of the hop-then-tilt preparation.
/// `η = ∞` selects the hard-core sector.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrepSweepParams {
    pub geometry: GeometryKind,
    pub particles: usize,
    #[serde(with = "super::extended::list")]
    pub eta_over_g: Vec<f64>,
    pub g_max: f64,
    /// Defaults to `g_max`.
    pub delta_max: Option<f64>,
    /// Default `π/2` on chains and `2π/3` on the triangle.
    pub theta: Option<f64>,
    pub phi: Option<f64>,
    pub init: InitialState,
    pub hardcore_sites: HardcoreSites,
    /// Occupancy cap for finite `η`; defaults to `N`.
    pub n_max: Option<usize>,
    /// Repeat truncated points at `n_max + 1` and report the fidelity change.
    pub convergence_check: bool,
    pub evolution: EvolutionConfig,
    pub dimension_cap: usize,
}

impl Default for PrepSweepParams {
    fn default() -> Self {
        Self {
            geometry: GeometryKind::Chain1D { len: 8 },
            particles: 4,
            eta_over_g: super::logspace(1e-2, 1e3, 11),
            g_max: 1.0,
            delta_max: None,
            theta: None,
            phi: None,
            init: InitialState::Hardcore,
            hardcore_sites: HardcoreSites::Leading,
            n_max: None,
            convergence_check: false,
            evolution: EvolutionConfig::default(),
            dimension_cap: DEFAULT_DIMENSION_CAP,
        }
    }
}

pub(crate) fn build_geometry(kind: GeometryKind) -> Result<Arc<Geometry>> {
    Ok(Arc::new(match kind {
        GeometryKind::Chain1D { len } => chain_geometry(len)?,
        GeometryKind::Triangular { ell } => triangular_geometry(ell)?,
        GeometryKind::UniformChain { .. } => {
            return Err(Error::Unsupported("the preparation sequence needs an engineered lattice".into()))
        }
    }))
}

pub(crate) struct Sector {
    pub basis: Arc<FockBasis>,
    pub ops: PrepOperators,
}

impl Sector {
    pub fn new(geometry: &Arc<Geometry>, particles: usize, n_max: usize, cap: usize) -> Result<Self> {
        let basis = Arc::new(FockBasis::with_cap(geometry.clone(), particles, n_max, cap)?);
        let ops = PrepOperators::build(&basis)?;
        Ok(Self { basis, ops })
    }

    pub fn initial(&self, init: InitialState, sites: &HardcoreSites) -> Result<StateVector> {
        match init {
            InitialState::Condensate => StateVector::condensate(self.basis.clone()),
            InitialState::Hardcore => StateVector::hardcore(self.basis.clone(), sites),
        }
    }
}

struct PointOutcome {
    fidelity: f64,
    n_max: usize,
    dim: usize,
    reports: Vec<SegmentReport>,
    convergence_delta: Option<f64>,
}

impl PrepSweepParams {
    fn prep_params(&self, eta: f64) -> PrepParams {
        let mut p = PrepParams::for_geometry(self.geometry, self.g_max, eta);
        p.delta_max = self.delta_max.unwrap_or(self.g_max);
        if let Some(t) = self.theta {
            p.theta = t;
        }
        if let Some(f) = self.phi {
            p.phi = f;
        }
        p
    }

    fn validate(&self) -> Result<()> {
        if self.eta_over_g.is_empty() {
            return Err(Error::Parameter("empty η/g axis".into()));
        }
        if self.eta_over_g.iter().any(|e| e.is_nan() || *e < 0.0) {
            return Err(Error::Parameter("η/g values must be nonnegative (use inf for the hard-core limit)".into()));
        }
        if !(self.g_max > 0.0) {
            return Err(Error::Parameter("g_max must be positive".into()));
        }
        self.evolution.validate()
    }
}

fn run_point(p: &PrepSweepParams, sector: &Sector, eta: f64) -> Result<(f64, Vec<SegmentReport>)> {
    let kind = p.geometry;
    let schedule = standard_prep_schedule(&sector.basis, &sector.ops, &p.prep_params(eta))?;
    let target_eta = if sector.basis.is_hardcore() { 0.0 } else { eta };
    let (_, target) = ground_state(&sector.ops.target(kind, p.g_max, target_eta)?)?;
    let psi0 = sector.initial(p.init, &p.hardcore_sites)?;
    let (out, reports) = evolve_schedule(&psi0, &schedule, &p.evolution)?;
    Ok((target.fidelity(&out), reports))
}

/// Linearly interpolated crossings of `level` in `log x`, over the finite
/// positive points sorted by `x`.
pub fn crossings(x: &[f64], y: &[f64], level: f64) -> Vec<f64> {
    let mut pts: Vec<(f64, f64)> = x.iter().zip(y).filter(|(a, _)| a.is_finite() && **a > 0.0).map(|(a, b)| (*a, *b)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.windows(2)
        .filter(|w| (w[0].1 - level) * (w[1].1 - level) <= 0.0 && w[0].1 != w[1].1)
        .map(|w| {
            let (l0, l1) = (w[0].0.ln(), w[1].0.ln());
            (l0 + (level - w[0].1) / (w[1].1 - w[0].1) * (l1 - l0)).exp()
        })
        .collect()
}

pub fn prep_sweep(p: &PrepSweepParams) -> Result<RunResult> {
    p.validate()?;
    let start = Instant::now();
    let geometry = build_geometry(p.geometry)?;
    let n = p.particles;
    let soft_cap = p.n_max.unwrap_or(n).clamp(1, n.max(1));
    let needs_hardcore = p.eta_over_g.iter().any(|e| e.is_infinite());
    let needs_soft = p.eta_over_g.iter().any(|e| e.is_finite());
    let hard = needs_hardcore.then(|| Sector::new(&geometry, n, 1, p.dimension_cap)).transpose()?;
    let soft = needs_soft.then(|| Sector::new(&geometry, n, soft_cap, p.dimension_cap)).transpose()?;
    let check = (p.convergence_check && needs_soft && soft_cap < n)
        .then(|| Sector::new(&geometry, n, soft_cap + 1, p.dimension_cap))
        .transpose()?;

    let outcomes: Vec<PointOutcome> = p
        .eta_over_g
        .par_iter()
        .map(|&ratio| {
            let eta = ratio * p.g_max;
            let sector = if ratio.is_infinite() { hard.as_ref() } else { soft.as_ref() }.expect("sector built");
            let (fidelity, reports) = run_point(p, sector, if ratio.is_infinite() { 0.0 } else { eta })?;
            let convergence_delta = match (&check, ratio.is_finite()) {
                (Some(c), true) => Some((run_point(p, c, eta)?.0 - fidelity).abs()),
                _ => None,
            };
            Ok(PointOutcome { fidelity, n_max: sector.basis.n_max(), dim: sector.basis.dim(), reports, convergence_delta })
        })
        .collect::<Result<_>>()?;

    let mut result = RunResult::new(
        match p.geometry {
            GeometryKind::Triangular { .. } => "prep2d",
            _ => "prep1d",
        },
        vec![Axis::new("eta_over_g", "", p.eta_over_g.clone())],
        &["fidelity"],
    );
    for (ratio, o) in p.eta_over_g.iter().zip(&outcomes) {
        result.push(&[*ratio], &[o.fidelity]);
    }
    let all_reports: Vec<SegmentReport> = outcomes.iter().flat_map(|o| o.reports.clone()).collect();
    let (norm_drift, number_drift) = drift(&all_reports);
    result.meta("parameters", p);
    result.meta(
        "points",
        p.eta_over_g
            .iter()
            .zip(&outcomes)
            .map(|(r, o)| {
                json!({
                    "eta_over_g": super::format_number(*r),
                    "n_max": o.n_max,
                    "dimension": o.dim,
                    "segments": o.reports,
                    "convergence_delta": o.convergence_delta,
                })
            })
            .collect::<Vec<_>>(),
    );
    result.meta("max_norm_drift", norm_drift);
    result.meta("max_number_drift", number_drift);
    result.meta("wall_time_s", start.elapsed().as_secs_f64());

    let fid: Vec<f64> = outcomes.iter().map(|o| o.fidelity).collect();
    let cross = crossings(&p.eta_over_g, &fid, 0.5);
    let crossover = match p.init {
        InitialState::Hardcore => cross.last().copied(),
        InitialState::Condensate => cross.first().copied(),
    };
    result.summarize("crossover_eta_over_g", crossover);
    result.summarize("crossings", cross);
    if let Some(worst) = outcomes.iter().filter_map(|o| o.convergence_delta).reduce(f64::max) {
        result.summarize("max_convergence_delta", worst);
        result.summarize("truncation_converged", worst < 1e-4);
    }
    result.summarize("all_segments_converged", all_reports.iter().all(|r| r.converged));
    result.validate()?;
    Ok(result)
}
