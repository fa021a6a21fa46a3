use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::prep::{build_geometry, Sector};
use super::{drift, golden_max, linspace, Axis, InitialState, RunResult};
use crate::error::{Error, Result};
use crate::evolve::{evolve_segment, ground_state, EvolutionConfig, SegmentReport, StaticPropagator};
use crate::fock::{HardcoreSites, StateVector, DEFAULT_DIMENSION_CAP};
use crate::lattice::GeometryKind;
use crate::operators::zeta;
use crate::pulses::{hop_rate, standard_prep_schedule, PrepParams};
use crate::units::mhz_to_angular;

/// Hop pulse from the hard-core product state, then a tilt pulse per angle
/// in `phis`; the tilt is diagonal and applied exactly.
struct PrepChain<'a> {
    sector: &'a Sector,
    params: PrepParams,
    after_hop: StateVector,
    hop_report: SegmentReport,
}

impl<'a> PrepChain<'a> {
    fn new(sector: &'a Sector, params: PrepParams, cfg: &EvolutionConfig) -> Result<Self> {
        let schedule = standard_prep_schedule(&sector.basis, &sector.ops, &params)?;
        let psi0 = sector.initial(InitialState::Hardcore, &HardcoreSites::Leading)?;
        let (after_hop, hop_report) = evolve_segment(&psi0, &schedule.segments[0], cfg)?;
        Ok(Self { sector, params, after_hop, hop_report })
    }

    fn with_tilt(&self, phi: f64, cfg: &EvolutionConfig) -> Result<(StateVector, SegmentReport)> {
        let p = PrepParams { phi, ..self.params };
        let schedule = standard_prep_schedule(&self.sector.basis, &self.sector.ops, &p)?;
        evolve_segment(&self.after_hop, &schedule.segments[1], cfg)
    }
}

fn sector_for(len: usize, particles: usize, eta: f64, n_max: Option<usize>) -> Result<Sector> {
    let geometry = build_geometry(GeometryKind::Chain1D { len })?;
    let cap = if eta.is_infinite() { 1 } else { n_max.unwrap_or(particles).clamp(1, particles.max(1)) };
    Sector::new(&geometry, particles, cap, DEFAULT_DIMENSION_CAP)
}

/// Centre-of-mass oscillations under the static hopping Hamiltonian after
/// the preparation sequence.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComProbeParams {
    pub len: usize,
    pub particles: usize,
    /// Interaction in rad/s; `inf` for hard-core.
    #[serde(with = "super::extended::one")]
    pub eta: f64,
    pub g_max: f64,
    /// End-site detuning during the tilt pulse.
    pub delta_max: f64,
    pub phis: Vec<f64>,
    pub probe_points: usize,
    /// Probe window in units of the hop period `2π/α`.
    pub probe_periods: f64,
    /// Golden-section refinement of the amplitude minimum.
    pub refine: bool,
    pub n_max: Option<usize>,
    pub evolution: EvolutionConfig,
}

impl Default for ComProbeParams {
    fn default() -> Self {
        Self {
            len: 8,
            particles: 4,
            eta: mhz_to_angular(-270.0),
            g_max: mhz_to_angular(15.0),
            delta_max: mhz_to_angular(25.0),
            phis: linspace(-0.6 * PI, -0.36 * PI, 25),
            probe_points: 200,
            probe_periods: 2.0,
            refine: true,
            n_max: None,
            evolution: EvolutionConfig::default(),
        }
    }
}

pub fn com_probe(p: &ComProbeParams) -> Result<RunResult> {
    if p.phis.is_empty() || p.probe_points < 2 {
        return Err(Error::Parameter("need at least one φ and two probe times".into()));
    }
    if !(p.g_max > 0.0 && p.delta_max > 0.0) {
        return Err(Error::Parameter("g_max and δ_max must be positive".into()));
    }
    p.evolution.validate()?;
    let start = Instant::now();
    let sector = sector_for(p.len, p.particles, p.eta, p.n_max)?;
    let kind = GeometryKind::Chain1D { len: p.len };
    let eta = if p.eta.is_infinite() { 0.0 } else { p.eta };
    let alpha = hop_rate(kind, p.g_max);
    let mut params = PrepParams::for_geometry(kind, p.g_max, eta);
    params.delta_max = p.delta_max;
    let chain = PrepChain::new(&sector, params, &p.evolution)?;
    let probe = StaticPropagator::new(Arc::new(sector.ops.target(kind, p.g_max, eta)?));
    let zeta_op = zeta(&sector.basis)?;
    let times = linspace(0.0, p.probe_periods * 2.0 * PI / alpha, p.probe_points);

    let trace = |phi: f64| -> Result<(Vec<f64>, SegmentReport)> {
        let (psi, report) = chain.with_tilt(phi, &p.evolution)?;
        let states = probe.evolve_grid(&psi, &times)?;
        Ok((states.iter().map(|s| zeta_op.expectation(&s.amps).re).collect(), report))
    };
    let amplitude = |z: &[f64]| {
        let (lo, hi) = z.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        0.5 * (hi - lo)
    };

    let traces: Vec<(Vec<f64>, SegmentReport)> = p.phis.par_iter().map(|&phi| trace(phi)).collect::<Result<_>>()?;
    let mut result = RunResult::new(
        "com_probe",
        vec![Axis::new("phi", "rad", p.phis.clone()), Axis::new("t_h", "s", times.clone())],
        &["zeta", "zeta_hardcore_reference"],
    );
    // hard-core ⟨ζ⟩ amplitude; 1 at half filling
    let reference_amplitude = 4.0 * (p.particles * p.len.saturating_sub(p.particles)) as f64 / (p.len * p.len) as f64;
    let mut worst_reference = 0.0f64;
    for (phi, (z, _)) in p.phis.iter().zip(&traces) {
        for (t, zv) in times.iter().zip(z) {
            let reference = reference_amplitude * phi.cos() * (alpha * t).sin();
            worst_reference = worst_reference.max((zv - reference).abs());
            result.push(&[*phi, *t], &[*zv, reference]);
        }
    }
    let amps: Vec<f64> = traces.iter().map(|(z, _)| amplitude(z)).collect();
    let k = (0..amps.len()).min_by(|&a, &b| amps[a].total_cmp(&amps[b])).expect("nonempty");
    let (mut phi_star, mut amp_star) = (p.phis[k], amps[k]);
    if p.refine && p.phis.len() >= 3 {
        let lo = p.phis[k.saturating_sub(1)];
        let hi = p.phis[(k + 1).min(p.phis.len() - 1)];
        let (x, fx) = golden_max(|phi| trace(phi).map(|(z, _)| -amplitude(&z)).unwrap_or(f64::NEG_INFINITY), lo.min(hi), lo.max(hi), 1e-4);
        if -fx <= amp_star {
            phi_star = x;
            amp_star = -fx;
        }
    }
    let mut reports = vec![chain.hop_report.clone()];
    reports.extend(traces.iter().map(|(_, r)| r.clone()));
    let (norm_drift, number_drift) = drift(&reports);
    result.meta("parameters", p);
    result.meta("alpha_hop", alpha);
    result.meta("reference_amplitude", reference_amplitude);
    result.meta("dimension", sector.basis.dim());
    result.meta("n_max", sector.basis.n_max());
    result.meta("segments", &reports);
    result.meta("max_norm_drift", norm_drift);
    result.meta("max_number_drift", number_drift);
    result.meta("wall_time_s", start.elapsed().as_secs_f64());
    result.summarize("amplitudes", &amps);
    result.summarize("phi_star", phi_star);
    result.summarize("phi_star_over_pi", phi_star / PI);
    result.summarize("amplitude_at_phi_star", amp_star);
    result.summarize("max_reference_deviation", worst_reference);
    result.validate()?;
    Ok(result)
}

/// Fidelity as a function of the tilt angle for a set of interaction strengths.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseScanParams {
    pub len: usize,
    pub particles: usize,
    #[serde(with = "super::extended::list")]
    pub eta_over_g: Vec<f64>,
    pub phis: Vec<f64>,
    pub theta: f64,
    pub g_max: f64,
    pub delta_max: Option<f64>,
    pub refine: bool,
    pub n_max: Option<usize>,
    pub evolution: EvolutionConfig,
}

impl Default for PhaseScanParams {
    fn default() -> Self {
        Self {
            len: 8,
            particles: 4,
            eta_over_g: vec![f64::INFINITY, 100.0, 40.0, 20.0, 10.0, 5.0, 3.0],
            phis: linspace(0.2 * PI, 0.7 * PI, 26),
            theta: PI / 2.0,
            g_max: 1.0,
            delta_max: None,
            refine: true,
            n_max: None,
            evolution: EvolutionConfig::default(),
        }
    }
}

pub fn phase_scan(p: &PhaseScanParams) -> Result<RunResult> {
    if p.eta_over_g.is_empty() || p.phis.is_empty() {
        return Err(Error::Parameter("empty η/g or φ axis".into()));
    }
    p.evolution.validate()?;
    let start = Instant::now();
    let kind = GeometryKind::Chain1D { len: p.len };

    struct Row {
        fidelities: Vec<f64>,
        phi_star: f64,
        fidelity_star: f64,
        fidelity_half_pi: f64,
        reports: Vec<SegmentReport>,
        dimension: usize,
    }

    let rows: Vec<Row> = p
        .eta_over_g
        .par_iter()
        .map(|&ratio| {
            let eta = if ratio.is_infinite() { 0.0 } else { ratio * p.g_max };
            let sector = sector_for(p.len, p.particles, ratio, p.n_max)?;
            let mut params = PrepParams::for_geometry(kind, p.g_max, eta);
            params.theta = p.theta;
            params.delta_max = p.delta_max.unwrap_or(p.g_max);
            let chain = PrepChain::new(&sector, params, &p.evolution)?;
            let (_, target) = ground_state(&sector.ops.target(kind, p.g_max, eta)?)?;
            let mut reports = vec![chain.hop_report.clone()];
            let fid = |phi: f64, reports: &mut Vec<SegmentReport>| -> Result<f64> {
                let (psi, r) = chain.with_tilt(phi, &p.evolution)?;
                reports.push(r);
                Ok(target.fidelity(&psi))
            };
            let fidelities: Vec<f64> = p.phis.iter().map(|&phi| fid(phi, &mut reports)).collect::<Result<_>>()?;
            let k = (0..fidelities.len()).max_by(|&a, &b| fidelities[a].total_cmp(&fidelities[b])).expect("nonempty");
            let (mut phi_star, mut fidelity_star) = (p.phis[k], fidelities[k]);
            if p.refine && p.phis.len() >= 3 {
                let lo = p.phis[k.saturating_sub(1)];
                let hi = p.phis[(k + 1).min(p.phis.len() - 1)];
                let f = |phi: f64| chain.with_tilt(phi, &p.evolution).map(|(s, _)| target.fidelity(&s)).unwrap_or(f64::NEG_INFINITY);
                let (x, fx) = golden_max(f, lo.min(hi), lo.max(hi), 1e-7);
                if fx >= fidelity_star {
                    phi_star = x;
                    fidelity_star = fx;
                }
            }
            let fidelity_half_pi = fid(PI / 2.0, &mut reports)?;
            Ok(Row { fidelities, phi_star, fidelity_star, fidelity_half_pi, reports, dimension: sector.basis.dim() })
        })
        .collect::<Result<_>>()?;

    let mut result = RunResult::new(
        "phase_scan",
        vec![Axis::new("eta_over_g", "", p.eta_over_g.clone()), Axis::new("phi", "rad", p.phis.clone())],
        &["fidelity"],
    );
    for (ratio, row) in p.eta_over_g.iter().zip(&rows) {
        for (phi, f) in p.phis.iter().zip(&row.fidelities) {
            result.push(&[*ratio, *phi], &[*f]);
        }
    }
    let all: Vec<SegmentReport> = rows.iter().flat_map(|r| r.reports.clone()).collect();
    let (norm_drift, number_drift) = drift(&all);
    result.meta("parameters", p);
    result.meta("dimensions", rows.iter().map(|r| r.dimension).collect::<Vec<_>>());
    result.meta("max_norm_drift", norm_drift);
    result.meta("max_number_drift", number_drift);
    result.meta("wall_time_s", start.elapsed().as_secs_f64());
    result.summarize(
        "optimum",
        p.eta_over_g
            .iter()
            .zip(&rows)
            .map(|(ratio, r)| {
                json!({
                    "eta_over_g": super::format_number(*ratio),
                    "phi_star": r.phi_star,
                    "phi_star_over_pi": r.phi_star / PI,
                    "fidelity_at_phi_star": r.fidelity_star,
                    "fidelity_at_half_pi": r.fidelity_half_pi,
                })
            })
            .collect::<Vec<_>>(),
    );
    result.summarize("phi_star", rows.iter().map(|r| r.phi_star).collect::<Vec<_>>());
    result.validate()?;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hardcore_probe_follows_reference() {
        for (len, particles, phi) in [(6, 3, PI / 2.0), (6, 3, 0.0), (6, 3, 0.7), (5, 2, 0.3), (7, 2, -1.0)] {
            let p = ComProbeParams {
                len,
                particles,
                eta: f64::INFINITY,
                g_max: 1.0,
                delta_max: 1.0,
                phis: vec![phi],
                probe_points: 40,
                refine: false,
                ..Default::default()
            };
            let r = com_probe(&p).unwrap();
            let dev = r.summary["max_reference_deviation"].as_f64().unwrap();
            assert!(dev < 1e-6, "L={len}, N={particles}, φ={phi}: {dev}");
        }
    }

    #[test]
    fn hardcore_phase_optimum_is_half_pi() {
        let p = PhaseScanParams {
            len: 6,
            particles: 3,
            eta_over_g: vec![f64::INFINITY, 8.0],
            phis: linspace(0.3 * PI, 0.6 * PI, 7),
            ..Default::default()
        };
        let r = phase_scan(&p).unwrap();
        let stars: Vec<f64> = r.summary["phi_star"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
        assert!((stars[0] - PI / 2.0).abs() < 1e-3);
        assert!(stars[1] < stars[0]);
        let opt = &r.summary["optimum"][1];
        assert!(opt["fidelity_at_phi_star"].as_f64().unwrap() >= opt["fidelity_at_half_pi"].as_f64().unwrap());
    }
}
