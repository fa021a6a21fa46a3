use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::prep::build_geometry;
use super::{drift, golden_max, linspace, Axis, RunResult};
use crate::error::{Error, Result};
use crate::evolve::{evolve_segment, ground_state, EvolutionConfig, SegmentReport};
use crate::fock::{FockBasis, StateVector, DEFAULT_DIMENSION_CAP};
use crate::lattice::{chain_max_raw, triangular_max_raw, Geometry, GeometryKind};
use crate::operators::{
    bond_hopping, cat_compensation_coefficient, cat_effective_hop, cat_weight_pattern, interaction, site_tilt,
    WeightConvention,
};
use crate::pulses::{
    angle_to_duration, power_area_factor, tilt_rate, AngleKind, Coefficient, GeneratorKind, PulseSegment, Waveform,
};
use crate::sparse::{one_body, SparseOperator};
use crate::units::mhz_to_angular;

const GRID_POINTS: usize = 13;
const GRID_SPAN: (f64, f64) = (0.4, 1.6);
const ANGLE_TOLERANCE: f64 = 1e-3;
const VALIDITY_LIMIT: f64 = 0.2;

/// Cat-state preparation in the attractive model: a weighted bare hopping
/// pulse whose `N`-th order tunnelling reproduces the engineered generator,
/// followed by an on-site tilt.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CatParams {
    pub geometry: GeometryKind,
    pub particles: usize,
    /// Sweep axis `g_max/|η|`.
    pub g_over_eta: Vec<f64>,
    /// Attractive interaction in rad/s.
    pub eta: f64,
    /// `1` uses bare weights only; `2` adds the `g²` detuning compensation.
    pub order: u8,
    pub optimize_angles: bool,
    /// Defaults to `2π/3` on the triangle and `π/2` on chains.
    pub theta: Option<f64>,
    pub phi: Option<f64>,
    /// Tilt peak detuning as a multiple of `g_max`.
    pub delta_over_g: f64,
    pub weights: WeightConvention,
    /// Bare coupling used for the reported gate duration, in rad/s.
    pub reference_g_max: f64,
    pub evolution: EvolutionConfig,
    pub dimension_cap: usize,
}

impl Default for CatParams {
    fn default() -> Self {
        Self {
            geometry: GeometryKind::Triangular { ell: 2 },
            particles: 3,
            g_over_eta: vec![0.01, 0.02, 0.03, 0.05, 0.075, 0.1, 0.15, 0.2],
            eta: mhz_to_angular(-300.0),
            order: 2,
            optimize_angles: true,
            theta: None,
            phi: None,
            delta_over_g: 1.0,
            weights: WeightConvention::Normalized,
            reference_g_max: mhz_to_angular(25.0),
            evolution: EvolutionConfig::default(),
            dimension_cap: DEFAULT_DIMENSION_CAP,
        }
    }
}

impl CatParams {
    fn nominal_angle(&self) -> f64 {
        match self.geometry {
            GeometryKind::Triangular { .. } => 2.0 * PI / 3.0,
            _ => PI / 2.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.particles < 2 {
            return Err(Error::DegenerateManifold(self.particles));
        }
        if !(self.eta < 0.0) || !self.eta.is_finite() {
            return Err(Error::Parameter(format!("cat preparation needs finite η < 0, got {}", self.eta)));
        }
        if !(self.order == 1 || self.order == 2) {
            return Err(Error::Parameter(format!("order must be 1 or 2, got {}", self.order)));
        }
        if self.g_over_eta.is_empty() || self.g_over_eta.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(Error::Parameter("g_max/|η| values must be finite and positive".into()));
        }
        if !(self.delta_over_g > 0.0) || !(self.reference_g_max > 0.0) {
            return Err(Error::Parameter("δ_max/g_max and the reference coupling must be positive".into()));
        }
        self.evolution.validate()
    }

    fn angle_kind(&self, eta: f64) -> Result<AngleKind> {
        let particles = self.particles;
        match self.geometry {
            GeometryKind::Chain1D { len } => Ok(AngleKind::CatChainHop { len, particles, eta }),
            GeometryKind::Triangular { ell } => Ok(AngleKind::CatTriHop { ell, particles, eta }),
            other => Err(Error::Unsupported(format!("no cat weights for {other:?}"))),
        }
    }
}

/// Largest single-particle amplitude of the engineered hop generator.
fn generator_peak(kind: GeometryKind) -> f64 {
    match kind {
        GeometryKind::Chain1D { len } => chain_max_raw(len) / 2.0,
        GeometryKind::Triangular { ell } => triangular_max_raw(ell),
        GeometryKind::UniformChain { .. } => 1.0,
    }
}

struct CatOperators {
    basis: Arc<FockBasis>,
    hop: Arc<SparseOperator>,
    compensation: Arc<SparseOperator>,
    tilt: Arc<SparseOperator>,
    interaction: Arc<SparseOperator>,
}

impl CatOperators {
    fn build(geometry: &Arc<Geometry>, p: &CatParams) -> Result<Self> {
        let n = p.particles;
        let basis = Arc::new(FockBasis::with_cap(geometry.clone(), n, n, p.dimension_cap)?);
        let weights = cat_weight_pattern(geometry, n, p.weights)?;
        let hop = bond_hopping(&basis, &weights, "cat_hop")?;
        let coeff = cat_compensation_coefficient(p.eta, n);
        let mut squares = vec![0.0; geometry.num_sites()];
        for (b, w) in geometry.bonds.iter().zip(&weights) {
            squares[b.i] += w * w;
            squares[b.j] += w * w;
        }
        let shift: Vec<f64> = squares.iter().map(|s| s * coeff).collect();
        let compensation = one_body(&basis, &[], Some(&shift), "cat_compensation");
        let tilt = one_body(&basis, &[], Some(&site_tilt(geometry)), "cat_tilt");
        Ok(Self {
            hop: Arc::new(hop),
            compensation: Arc::new(compensation),
            tilt: Arc::new(tilt),
            interaction: Arc::new(interaction(&basis)),
            basis,
        })
    }
}

/// One `g_max` point: fixed operators, durations and target state.
struct CatPoint<'a> {
    ops: &'a CatOperators,
    p: &'a CatParams,
    g_max: f64,
    /// Magnitude of the effective generator coefficient at peak coupling.
    effective_rate: f64,
    tilt_coefficient: f64,
    target: StateVector,
    initial: StateVector,
}

impl<'a> CatPoint<'a> {
    fn new(ops: &'a CatOperators, p: &'a CatParams, g_max: f64) -> Result<Self> {
        let n = p.particles;
        let effective_rate = cat_effective_hop(g_max, p.eta, n).abs() / generator_peak(p.geometry);
        let tilt_coefficient = tilt_rate(p.geometry, p.delta_over_g * g_max);
        let mut terms = vec![(-g_max, &*ops.hop), (0.5 * p.eta, &*ops.interaction)];
        if p.order == 2 {
            terms.push((g_max * g_max, &*ops.compensation));
        }
        let (_, target) = ground_state(&SparseOperator::linear_combination(&terms, "H_target")?)?;
        let initial = StateVector::condensate(ops.basis.clone())?;
        Ok(Self { ops, p, g_max, effective_rate, tilt_coefficient, target, initial })
    }

    fn hop_duration(&self, theta: f64) -> f64 {
        theta / (self.effective_rate * power_area_factor(self.p.particles as u32))
    }

    fn hop(&self, theta: f64) -> Result<(StateVector, SegmentReport)> {
        let mut seg = PulseSegment::new(
            "cat_hop",
            GeneratorKind::CatHop,
            self.ops.hop.clone(),
            Waveform::new(self.hop_duration(theta), -self.g_max),
        )
        .with_interaction(self.p.eta, self.ops.interaction.clone());
        if self.p.order == 2 {
            let scale = self.g_max * self.g_max;
            seg = seg.with_term(self.ops.compensation.clone(), Coefficient::Pulse { scale, power: 2 });
        }
        evolve_segment(&self.initial, &seg, &self.p.evolution)
    }

    fn tilt(&self, psi: &StateVector, phi: f64) -> Result<(StateVector, SegmentReport)> {
        let rate = self.tilt_coefficient;
        let duration = phi / (self.p.particles as f64 * rate.abs());
        let seg = PulseSegment::new("cat_tilt", GeneratorKind::CatTilt, self.ops.tilt.clone(), Waveform::new(duration, rate))
            .with_interaction(self.p.eta, self.ops.interaction.clone());
        evolve_segment(psi, &seg, &self.p.evolution)
    }

    fn fidelity(&self, theta: f64, phi: f64) -> Result<(f64, Vec<SegmentReport>)> {
        let (mid, r1) = self.hop(theta)?;
        let (out, r2) = self.tilt(&mid, phi)?;
        Ok((self.target.fidelity(&out), vec![r1, r2]))
    }
}

struct CatOutcome {
    fidelity: f64,
    fidelity_nominal: f64,
    theta: f64,
    phi: f64,
    hop_duration: f64,
    reports: Vec<SegmentReport>,
    warning: Option<String>,
}

fn optimise(point: &CatPoint, theta0: f64, phi0: f64) -> Result<(f64, f64, f64, Vec<SegmentReport>)> {
    let thetas = linspace(GRID_SPAN.0 * theta0, GRID_SPAN.1 * theta0, GRID_POINTS);
    let phis = linspace(GRID_SPAN.0 * phi0, GRID_SPAN.1 * phi0, GRID_POINTS);
    let mut reports = Vec::new();
    let mut best = (f64::NEG_INFINITY, 0, 0);
    for (i, &theta) in thetas.iter().enumerate() {
        let (mid, r) = point.hop(theta)?;
        reports.push(r);
        for (j, &phi) in phis.iter().enumerate() {
            let (out, r) = point.tilt(&mid, phi)?;
            reports.push(r);
            let f = point.target.fidelity(&out);
            if f > best.0 {
                best = (f, i, j);
            }
        }
    }
    let (mut fbest, i, j) = best;
    let (mut theta, mut phi) = (thetas[i], phis[j]);
    let around = |grid: &[f64], k: usize| (grid[k.saturating_sub(1)], grid[(k + 1).min(grid.len() - 1)]);

    let (lo, hi) = around(&thetas, i);
    let (x, fx) = golden_max(|t| point.fidelity(t, phi).map(|v| v.0).unwrap_or(f64::NEG_INFINITY), lo, hi, ANGLE_TOLERANCE);
    if fx > fbest {
        theta = x;
        fbest = fx;
    }
    let (mid, r) = point.hop(theta)?;
    reports.push(r);
    let (lo, hi) = around(&phis, j);
    let (x, fx) = golden_max(
        |f| point.tilt(&mid, f).map(|(s, _)| point.target.fidelity(&s)).unwrap_or(f64::NEG_INFINITY),
        lo,
        hi,
        ANGLE_TOLERANCE,
    );
    if fx > fbest {
        phi = x;
        fbest = fx;
    }
    Ok((fbest, theta, phi, reports))
}

fn run_point(ops: &CatOperators, p: &CatParams, ratio: f64) -> Result<CatOutcome> {
    let g_max = ratio * p.eta.abs();
    let point = CatPoint::new(ops, p, g_max)?;
    let theta0 = p.theta.unwrap_or_else(|| p.nominal_angle());
    let phi0 = p.phi.unwrap_or_else(|| p.nominal_angle());
    let (fidelity_nominal, mut reports) = point.fidelity(theta0, phi0)?;
    let (fidelity, theta, phi) = if p.optimize_angles {
        let (f, t, ph, r) = optimise(&point, theta0, phi0)?;
        reports.extend(r);
        if f >= fidelity_nominal {
            (f, t, ph)
        } else {
            (fidelity_nominal, theta0, phi0)
        }
    } else {
        (fidelity_nominal, theta0, phi0)
    };
    let warning = (ratio > VALIDITY_LIMIT)
        .then(|| format!("g_max/|η| = {ratio:.3} > {VALIDITY_LIMIT}; effective model is not controlled"));
    Ok(CatOutcome { fidelity, fidelity_nominal, theta, phi, hop_duration: point.hop_duration(theta), reports, warning })
}

/// Gate duration of the nominal cat hop at `reference_g_max`, as a plateau
/// length and with the `f^N` envelope area accounted for.
fn gate_duration(p: &CatParams) -> Result<serde_json::Value> {
    let theta = p.theta.unwrap_or_else(|| p.nominal_angle());
    let kind = p.angle_kind(p.eta)?;
    let plateau = angle_to_duration(kind, theta, p.reference_g_max)?;
    let area = plateau / power_area_factor(p.particles as u32);
    Ok(json!({
        "reference_g_max": p.reference_g_max,
        "effective_hop": cat_effective_hop(p.reference_g_max, p.eta, p.particles),
        "theta": theta,
        "tau_plateau_s": plateau,
        "tau_envelope_s": area,
        "power_area_factor": power_area_factor(p.particles as u32),
    }))
}

pub fn cat_prep(p: &CatParams) -> Result<RunResult> {
    p.validate()?;
    p.angle_kind(p.eta)?;
    let start = Instant::now();
    let geometry = build_geometry(p.geometry)?;
    let ops = CatOperators::build(&geometry, p)?;
    let outcomes: Vec<CatOutcome> = p.g_over_eta.par_iter().map(|&r| run_point(&ops, p, r)).collect::<Result<_>>()?;

    let mut result = RunResult::new(
        "cat",
        vec![Axis::new("g_over_eta", "", p.g_over_eta.clone())],
        &["fidelity", "fidelity_nominal", "theta", "phi", "hop_duration_s"],
    );
    for (r, o) in p.g_over_eta.iter().zip(&outcomes) {
        result.push(&[*r], &[o.fidelity, o.fidelity_nominal, o.theta, o.phi, o.hop_duration]);
    }
    let reports: Vec<SegmentReport> = outcomes.iter().flat_map(|o| o.reports.iter().cloned()).collect();
    let (norm_drift, number_drift) = drift(&reports);
    let warnings: Vec<&String> = outcomes.iter().filter_map(|o| o.warning.as_ref()).collect();
    result.meta("parameters", p);
    result.meta("dimension", ops.basis.dim());
    result.meta("gate_duration", gate_duration(p)?);
    result.meta("warnings", &warnings);
    result.meta("max_norm_drift", norm_drift);
    result.meta("max_number_drift", number_drift);
    result.meta("segments_converged", reports.iter().all(|r| r.converged));
    result.meta("wall_time_s", start.elapsed().as_secs_f64());
    let fid: Vec<f64> = outcomes.iter().map(|o| o.fidelity).collect();
    let threshold = p
        .g_over_eta
        .iter()
        .zip(&fid)
        .filter(|(_, f)| **f >= 0.99)
        .map(|(r, _)| *r)
        .fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.max(r))));
    result.summarize("max_fidelity", fid.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    result.summarize("largest_ratio_above_0_99", threshold);
    result.summarize("warnings", warnings.len());
    result.validate()?;
    Ok(result)
}
