use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::prep::{build_geometry, Sector};
use super::{Axis, InitialState, RunResult};
use crate::error::{Error, Result};
use crate::evolve::{evolve_segment_observed, ground_state, EvolutionConfig, Method};
use crate::fock::{FockBasis, HardcoreSites, DEFAULT_DIMENSION_CAP};
use crate::lattice::GeometryKind;
use crate::pulses::{standard_prep_schedule, PrepParams};

/// Site densities during the first (hop) pulse, for the non-interacting
/// condensate and the hard-core product state.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MovieParams {
    pub len: usize,
    pub particles: usize,
    pub theta: f64,
    pub g_max: f64,
    pub frames: usize,
    pub steps_per_frame: usize,
    pub method: Method,
    pub dimension_cap: usize,
}

impl Default for MovieParams {
    fn default() -> Self {
        Self {
            len: 21,
            particles: 5,
            theta: PI / 2.0,
            g_max: 1.0,
            frames: 81,
            steps_per_frame: 5,
            method: Method::KrylovExpm,
            dimension_cap: DEFAULT_DIMENSION_CAP,
        }
    }
}

fn density(basis: &FockBasis, amps: &[Complex64]) -> Vec<f64> {
    let mut rho = vec![0.0; basis.num_sites()];
    for (k, a) in amps.iter().enumerate() {
        let w = a.norm_sqr();
        if w == 0.0 {
            continue;
        }
        for (r, &n) in rho.iter_mut().zip(basis.state(k)) {
            *r += w * n as f64;
        }
    }
    rho
}

struct Panel {
    frames: Vec<Vec<f64>>,
    ground: Vec<f64>,
    dimension: usize,
    duration: f64,
    norm_drift: f64,
}

fn run_panel(p: &MovieParams, init: InitialState) -> Result<Panel> {
    let kind = GeometryKind::Chain1D { len: p.len };
    let geometry = build_geometry(kind)?;
    let n_max = match init {
        InitialState::Condensate => p.particles,
        InitialState::Hardcore => 1,
    };
    let sector = Sector::new(&geometry, p.particles, n_max, p.dimension_cap)?;
    let mut prep = PrepParams::for_geometry(kind, p.g_max, 0.0);
    prep.theta = p.theta;
    prep.phi = 0.0;
    let schedule = standard_prep_schedule(&sector.basis, &sector.ops, &prep)?;
    let hop = &schedule.segments[0];
    let psi0 = sector.initial(init, &HardcoreSites::Leading)?;
    let cfg = EvolutionConfig {
        steps_per_segment: (p.frames - 1) * p.steps_per_frame,
        method: p.method,
        auto_refine: false,
        ..EvolutionConfig::default()
    };
    let basis = sector.basis.clone();
    let mut frames = vec![density(&basis, &psi0.amps)];
    let mut step = 0usize;
    let out = evolve_segment_observed(&psi0, hop, &cfg, &mut |_, amps| {
        step += 1;
        if step % p.steps_per_frame == 0 {
            frames.push(density(&basis, amps));
        }
    })?;
    let (_, ground) = ground_state(&sector.ops.target(kind, p.g_max, 0.0)?)?;
    Ok(Panel { frames, ground: ground.density_profile(), dimension: basis.dim(), duration: hop.duration(), norm_drift: (out.norm() - 1.0).abs() })
}

pub fn density_movie(p: &MovieParams) -> Result<RunResult> {
    if p.len < 2 || p.particles == 0 || p.particles > p.len {
        return Err(Error::Parameter(format!("need 0 < N ≤ L and L ≥ 2, got L={}, N={}", p.len, p.particles)));
    }
    if p.frames < 2 || p.steps_per_frame == 0 || (p.frames - 1) * p.steps_per_frame < 50 {
        return Err(Error::Parameter("need at least 2 frames and 50 steps in total".into()));
    }
    if !(p.theta > 0.0) || !(p.g_max > 0.0) {
        return Err(Error::Parameter("θ and g_max must be positive".into()));
    }
    let start = Instant::now();
    let panels = [run_panel(p, InitialState::Condensate)?, run_panel(p, InitialState::Hardcore)?];
    let kind = GeometryKind::Chain1D { len: p.len };
    let rate = crate::pulses::hop_rate(kind, p.g_max);
    let duration = panels[0].duration;
    let times: Vec<f64> = (0..p.frames).map(|k| duration * k as f64 / (p.frames - 1) as f64).collect();
    let sites: Vec<f64> = (1..=p.len).map(|j| j as f64).collect();
    let mut result = RunResult::new(
        "density_movie",
        vec![Axis::new("panel", "", vec![0.0, 1.0]), Axis::new("t", "s", times.clone()), Axis::new("site", "", sites)],
        &["density"],
    );
    let mut panel_meta = Vec::new();
    let mut number_drift_all = 0.0f64;
    for (k, panel) in panels.iter().enumerate() {
        for (f, rho) in panel.frames.iter().enumerate() {
            for (j, &d) in rho.iter().enumerate() {
                result.push(&[k as f64, times[f], (j + 1) as f64], &[d]);
            }
        }
        let last = panel.frames.last().expect("final frame");
        let ground_deviation = last.iter().zip(&panel.ground).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let asymmetry = (0..p.len).map(|j| (last[j] - last[p.len - 1 - j]).abs()).fold(0.0, f64::max);
        let number_drift =
            panel.frames.iter().map(|rho| (rho.iter().sum::<f64>() - p.particles as f64).abs()).fold(0.0, f64::max);
        number_drift_all = number_drift_all.max(number_drift);
        panel_meta.push(json!({
            "panel": k,
            "initial_state": if k == 0 { "condensate" } else { "hardcore" },
            "eta": if k == 0 { "0" } else { "inf" },
            "dimension": panel.dimension,
            "final_density": last,
            "ground_state_density": panel.ground,
            "max_ground_density_deviation": ground_deviation,
            "max_asymmetry": asymmetry,
        }));
    }
    let worst = |key: &str| panel_meta.iter().map(|m| m[key].as_f64().unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
    result.summarize("max_ground_density_deviation", worst("max_ground_density_deviation"));
    result.summarize("max_asymmetry", worst("max_asymmetry"));
    result.meta("parameters", p);
    result.meta("alpha_hop", rate);
    result.meta("pulse_duration", duration);
    result.meta("panels", panel_meta);
    result.meta("max_norm_drift", panels.iter().map(|p| p.norm_drift).fold(0.0, f64::max));
    result.meta("max_number_drift", number_drift_all);
    result.meta("wall_time_s", start.elapsed().as_secs_f64());
    result.validate()?;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::chain_geometry;
    use crate::oracles::SingleParticlePropagator;
    use nalgebra::DMatrix;

    #[test]
    fn small_movie_reaches_ground_density() {
        let p = MovieParams { len: 7, particles: 3, frames: 11, steps_per_frame: 20, ..Default::default() };
        let r = density_movie(&p).unwrap();
        assert_eq!(r.records.len(), 2 * 11 * 7);
        assert!(r.summary["max_ground_density_deviation"].as_f64().unwrap() < 1e-6);
        assert!(r.summary["max_asymmetry"].as_f64().unwrap() < 1e-6);
        let d = r.column("density").unwrap();
        assert_eq!(&d[..7], &[3.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn condensate_frames_follow_single_particle_propagation() {
        let p = MovieParams { len: 6, particles: 2, frames: 5, steps_per_frame: 100, ..Default::default() };
        let r = density_movie(&p).unwrap();
        let geometry = chain_geometry(6).unwrap();
        let basis = std::sync::Arc::new(FockBasis::new(std::sync::Arc::new(geometry.clone()), 1, 1).unwrap());
        let sector = Sector { ops: crate::pulses::PrepOperators::build(&basis).unwrap(), basis };
        let mut prep = PrepParams::for_geometry(GeometryKind::Chain1D { len: 6 }, 1.0, 0.0);
        prep.phi = 0.0;
        let schedule = standard_prep_schedule(&sector.basis, &sector.ops, &prep).unwrap();
        let u = SingleParticlePropagator::from_schedule(&schedule, &geometry).unwrap();
        let mut e0 = DMatrix::zeros(6, 1);
        e0[(0, 0)] = Complex64::new(1.0, 0.0);
        let orbital = u.apply(&e0);
        let expected: Vec<f64> = orbital.iter().map(|a| 2.0 * a.norm_sqr()).collect();
        let d = r.column("density").unwrap();
        let last = &d[4 * 6..5 * 6];
        for (a, b) in last.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-6, "{last:?} vs {expected:?}");
        }
    }
}
