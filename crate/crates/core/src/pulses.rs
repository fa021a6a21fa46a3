//! Erf-broadened box pulses, phase-angle bookkeeping and schedules.
//!
//! A segment evolves under
//! `H(t) = a·f(t)·G + (η/2)·H_int + Σ_k c_k(t)·O_k`
//! where `G` is the generator, `a` the peak coefficient and `f` the unit
//! envelope. The phase angle of a segment is `a·∫f dt`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::FockBasis;
use crate::lattice::{chain_max_raw, triangular_max_raw, GeometryKind};
use crate::operators::{
    chain_hop, chain_tilt_operator, generator_max_hop, generator_max_tilt, interaction,
    many_body_generators_2d, cat_effective_hop,
};
use crate::sparse::SparseOperator;

pub const DEFAULT_PAD: f64 = 5.0;
pub const DEFAULT_SIGMA_RATIO: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Envelope {
    /// `½[erf((t−pσ)/(√2σ)) − erf((t−pσ−τ)/(√2σ))]` on `[0, τ + 2pσ]`.
    ErfBox { tau: f64, sigma: f64, pad: f64 },
    /// Unit envelope for a fixed duration.
    Flat { duration: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    pub envelope: Envelope,
    /// Peak generator coefficient in rad/s (or dimensionless rate units).
    pub amplitude: f64,
}

fn erf_antiderivative(u: f64) -> f64 {
    u * libm::erf(u) + (-u * u).exp() / PI.sqrt()
}

// 5-point Gauss-Legendre on [-1, 1]
const GL_NODES: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
    0.236_926_885_056_189_1,
];

impl Waveform {
    /// Box of plateau `tau` with the default `σ = τ/10`, `p = 5`.
    pub fn new(tau: f64, amplitude: f64) -> Self {
        Self {
            envelope: Envelope::ErfBox { tau, sigma: DEFAULT_SIGMA_RATIO * tau, pad: DEFAULT_PAD },
            amplitude,
        }
    }

    pub fn shaped(tau: f64, sigma: f64, pad: f64, amplitude: f64) -> Result<Self> {
        if !(tau > 0.0 && sigma > 0.0) {
            return Err(Error::Parameter(format!("need τ > 0 and σ > 0, got τ={tau}, σ={sigma}")));
        }
        if pad < 3.0 {
            return Err(Error::Parameter(format!("padding multiplier must be >= 3, got {pad}")));
        }
        Ok(Self { envelope: Envelope::ErfBox { tau, sigma, pad }, amplitude })
    }

    pub fn flat(duration: f64, amplitude: f64) -> Self {
        Self { envelope: Envelope::Flat { duration }, amplitude }
    }

    /// A segment of zero length.
    pub fn empty() -> Self {
        Self::flat(0.0, 0.0)
    }

    pub fn duration(&self) -> f64 {
        match self.envelope {
            Envelope::ErfBox { tau, sigma, pad } => tau + 2.0 * pad * sigma,
            Envelope::Flat { duration } => duration,
        }
    }

    /// Unit envelope `f(t)`.
    pub fn value(&self, t: f64) -> f64 {
        match self.envelope {
            Envelope::ErfBox { tau, sigma, pad } => {
                if tau == 0.0 {
                    return 0.0;
                }
                let s = std::f64::consts::SQRT_2 * sigma;
                let t0 = pad * sigma;
                0.5 * (libm::erf((t - t0) / s) - libm::erf((t - t0 - tau) / s))
            }
            Envelope::Flat { duration } => {
                if (0.0..=duration).contains(&t) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn coefficient(&self, t: f64) -> f64 {
        self.amplitude * self.value(t)
    }

    /// `∫_{t0}^{t1} f dt` in closed form.
    pub fn integral_between(&self, t0: f64, t1: f64) -> f64 {
        match self.envelope {
            Envelope::ErfBox { tau, sigma, pad } => {
                if tau == 0.0 {
                    return 0.0;
                }
                let s = std::f64::consts::SQRT_2 * sigma;
                let c = pad * sigma;
                let g = |t: f64| erf_antiderivative((t - c) / s) - erf_antiderivative((t - c - tau) / s);
                0.5 * s * (g(t1) - g(t0))
            }
            Envelope::Flat { duration } => t1.min(duration).max(0.0) - t0.max(0.0).min(duration),
        }
    }

    /// `∫₀ᵀ f dt`.
    pub fn integral(&self) -> f64 {
        self.integral_between(0.0, self.duration())
    }

    /// `∫₀ᵀ fⁿ dt` by composite Gauss-Legendre quadrature.
    pub fn power_integral(&self, power: u32) -> f64 {
        if power == 1 {
            return self.integral();
        }
        let total = self.duration();
        if total == 0.0 {
            return 0.0;
        }
        if let Envelope::Flat { duration } = self.envelope {
            return duration;
        }
        let panels = 2000;
        let h = total / panels as f64;
        let mut acc = 0.0;
        for k in 0..panels {
            let mid = (k as f64 + 0.5) * h;
            for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
                acc += w * self.value(mid + 0.5 * h * x).powi(power as i32);
            }
        }
        acc * 0.5 * h
    }

    /// Signed phase angle `a·∫f`.
    pub fn area(&self) -> f64 {
        self.amplitude * self.integral()
    }
}

/// `∫fⁿ / τ` for the default envelope shape; independent of `τ`.
pub fn power_area_factor(power: u32) -> f64 {
    Waveform::new(1.0, 1.0).power_integral(power)
}

/// The pulse families whose angles have a closed-form duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AngleKind {
    /// Engineered chain hopping; `peak` is the central-bond coupling.
    ChainHop { len: usize },
    /// Chain tilt; `peak` is the end-site detuning.
    ChainTilt { len: usize },
    /// Triangular hopping; `peak` is the largest bond coupling.
    TriHop { ell: usize },
    /// Triangular tilt; `peak` is the corner detuning.
    TriTilt { ell: usize },
    /// Effective cat hopping on a chain; `peak` is the bare `g_max`.
    CatChainHop { len: usize, particles: usize, eta: f64 },
    /// Effective cat hopping on the triangle; `peak` is the bare `g_max`.
    CatTriHop { ell: usize, particles: usize, eta: f64 },
}

impl AngleKind {
    /// Peak coefficient of the normalised generator for the given peak rate.
    pub fn generator_rate(&self, peak: f64) -> f64 {
        match *self {
            AngleKind::ChainHop { len } => 2.0 * peak / chain_max_raw(len),
            AngleKind::ChainTilt { len } => 2.0 * peak / (len as f64 - 1.0),
            AngleKind::TriHop { ell } => peak / triangular_max_raw(ell),
            AngleKind::TriTilt { ell } => 3.0 * peak / (2.0 * ell as f64),
            AngleKind::CatChainHop { len, particles, eta } => {
                2.0 * cat_effective_hop(peak, eta, particles).abs() / chain_max_raw(len)
            }
            AngleKind::CatTriHop { ell, particles, eta } => {
                cat_effective_hop(peak, eta, particles).abs() / triangular_max_raw(ell)
            }
        }
    }
}

/// Plateau duration `τ` giving phase angle `angle` at peak rate `peak`,
/// assuming `∫f = τ`.
pub fn angle_to_duration(kind: AngleKind, angle: f64, peak: f64) -> Result<f64> {
    if !(angle > 0.0) || !(peak > 0.0) {
        return Err(Error::Parameter(format!(
            "angle and peak must be positive, got angle={angle}, peak={peak}"
        )));
    }
    if let AngleKind::CatChainHop { particles, eta, .. } | AngleKind::CatTriHop { particles, eta, .. } = kind {
        if particles < 2 {
            return Err(Error::DegenerateManifold(particles));
        }
        if eta == 0.0 {
            return Err(Error::Parameter("cat pulses need η ≠ 0".into()));
        }
    }
    Ok(angle / kind.generator_rate(peak))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    /// `𝒳` or `𝒲`.
    Hop,
    /// `𝒵` or `𝒬`.
    Tilt,
    /// Weighted bare hopping driving the cat manifold.
    CatHop,
    /// On-site tilt applied to the cat manifold.
    CatTilt,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Coefficient {
    Constant(f64),
    /// `scale·f(t)^power` with the segment envelope.
    Pulse { scale: f64, power: u32 },
}

#[derive(Debug, Clone)]
pub struct Term {
    pub operator: Arc<SparseOperator>,
    pub coefficient: Coefficient,
}

#[derive(Debug, Clone)]
pub struct PulseSegment {
    pub label: String,
    pub kind: GeneratorKind,
    pub generator: Arc<SparseOperator>,
    pub waveform: Waveform,
    /// `η`; the segment carries `(η/2)·H_int` when an interaction operator is set.
    pub eta: f64,
    pub interaction: Option<Arc<SparseOperator>>,
    pub extra: Vec<Term>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SegmentSummary {
    pub label: String,
    pub generator: String,
    pub kind: GeneratorKind,
    pub envelope: Envelope,
    pub peak: f64,
    pub duration: f64,
    pub angle: f64,
    pub eta: f64,
    pub extra_terms: usize,
}

impl PulseSegment {
    pub fn new(label: impl Into<String>, kind: GeneratorKind, generator: Arc<SparseOperator>, waveform: Waveform) -> Self {
        Self { label: label.into(), kind, generator, waveform, eta: 0.0, interaction: None, extra: Vec::new() }
    }

    pub fn with_interaction(mut self, eta: f64, hint: Arc<SparseOperator>) -> Self {
        self.eta = eta;
        self.interaction = (eta != 0.0).then_some(hint);
        self
    }

    pub fn with_term(mut self, operator: Arc<SparseOperator>, coefficient: Coefficient) -> Self {
        self.extra.push(Term { operator, coefficient });
        self
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        self.generator.basis()
    }

    pub fn duration(&self) -> f64 {
        self.waveform.duration()
    }

    pub fn angle(&self) -> f64 {
        self.waveform.area()
    }

    fn coefficient_at(&self, c: Coefficient, t: f64) -> f64 {
        match c {
            Coefficient::Constant(v) => v,
            Coefficient::Pulse { scale, power } => scale * self.waveform.value(t).powi(power as i32),
        }
    }

    fn coefficient_integral(&self, c: Coefficient) -> f64 {
        match c {
            Coefficient::Constant(v) => v * self.duration(),
            Coefficient::Pulse { scale, power } => scale * self.waveform.power_integral(power),
        }
    }

    /// `(coefficient, operator)` pairs of `H(t)`.
    pub fn terms_at(&self, t: f64) -> Vec<(f64, &SparseOperator)> {
        let mut out = vec![(self.waveform.coefficient(t), self.generator.as_ref())];
        if let Some(h) = &self.interaction {
            out.push((0.5 * self.eta, h.as_ref()));
        }
        for term in &self.extra {
            out.push((self.coefficient_at(term.coefficient, t), term.operator.as_ref()));
        }
        out
    }

    /// `(∫coefficient dt, operator)` pairs over the whole segment.
    pub fn integrated_terms(&self) -> Vec<(f64, &SparseOperator)> {
        let mut out = vec![(self.waveform.area(), self.generator.as_ref())];
        if let Some(h) = &self.interaction {
            out.push((0.5 * self.eta * self.duration(), h.as_ref()));
        }
        for term in &self.extra {
            out.push((self.coefficient_integral(term.coefficient), term.operator.as_ref()));
        }
        out
    }

    /// True when every term is diagonal, so the propagator is a pure phase.
    pub fn is_diagonal(&self) -> bool {
        self.terms_at(0.0).iter().all(|(_, op)| op.is_diagonal())
    }

    pub fn summary(&self) -> SegmentSummary {
        SegmentSummary {
            label: self.label.clone(),
            generator: self.generator.label.clone(),
            kind: self.kind,
            envelope: self.waveform.envelope,
            peak: self.waveform.amplitude,
            duration: self.duration(),
            angle: self.angle(),
            eta: self.eta,
            extra_terms: self.extra.len(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct PulseSchedule {
    pub segments: Vec<PulseSegment>,
}

impl PulseSchedule {
    pub fn push(&mut self, segment: PulseSegment) {
        self.segments.push(segment);
    }

    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration()).sum()
    }

    pub fn summary(&self) -> Vec<SegmentSummary> {
        self.segments.iter().map(|s| s.summary()).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.summary())?)
    }
}

/// Parameters of the hop-then-tilt preparation sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrepParams {
    /// Largest bond coupling during the hop pulse.
    pub g_max: f64,
    /// Largest detuning during the tilt pulse.
    pub delta_max: f64,
    pub eta: f64,
    pub theta: f64,
    pub phi: f64,
    pub sigma_ratio: f64,
    pub pad: f64,
}

impl PrepParams {
    /// Defaults for the geometry: `δ_max = g_max`, angles `π/2` on chains and
    /// `2π/3` on the triangle.
    pub fn for_geometry(kind: GeometryKind, g_max: f64, eta: f64) -> Self {
        let angle = match kind {
            GeometryKind::Triangular { .. } => 2.0 * PI / 3.0,
            _ => PI / 2.0,
        };
        Self { g_max, delta_max: g_max, eta, theta: angle, phi: angle, sigma_ratio: DEFAULT_SIGMA_RATIO, pad: DEFAULT_PAD }
    }
}

/// `+1` on chains, `−1` on the triangle, where the couplings are negative.
pub fn coupling_sign(kind: GeometryKind) -> f64 {
    match kind {
        GeometryKind::Triangular { .. } => -1.0,
        _ => 1.0,
    }
}

/// Peak coefficient of the normalised hop generator for a given `g_max`,
/// including the geometry's sign convention.
pub fn hop_rate(kind: GeometryKind, g_max: f64) -> f64 {
    let kind_rate = match kind {
        GeometryKind::Chain1D { len } => AngleKind::ChainHop { len }.generator_rate(g_max),
        GeometryKind::Triangular { ell } => AngleKind::TriHop { ell }.generator_rate(g_max),
        GeometryKind::UniformChain { .. } => g_max,
    };
    coupling_sign(kind) * kind_rate
}

pub fn tilt_rate(kind: GeometryKind, delta_max: f64) -> f64 {
    let kind_rate = match kind {
        GeometryKind::Chain1D { len } => AngleKind::ChainTilt { len }.generator_rate(delta_max),
        GeometryKind::Triangular { ell } => AngleKind::TriTilt { ell }.generator_rate(delta_max),
        GeometryKind::UniformChain { len } => 2.0 * delta_max / (len as f64 - 1.0),
    };
    coupling_sign(kind) * kind_rate
}

/// Normalised hop and tilt generators and the interaction for a basis.
pub struct PrepOperators {
    pub hop: Arc<SparseOperator>,
    pub tilt: Arc<SparseOperator>,
    pub interaction: Arc<SparseOperator>,
}

impl PrepOperators {
    pub fn build(basis: &Arc<FockBasis>) -> Result<Self> {
        let (hop, tilt) = match basis.geometry().kind {
            GeometryKind::Chain1D { .. } => (chain_hop(basis)?, chain_tilt_operator(basis)?),
            GeometryKind::Triangular { .. } => {
                let l = many_body_generators_2d(basis)?;
                (l.w, l.q)
            }
            other => return Err(Error::Unsupported(format!("no preparation generators for {other:?}"))),
        };
        Ok(Self { hop: Arc::new(hop), tilt: Arc::new(tilt), interaction: Arc::new(interaction(basis)) })
    }

    /// `α_max·G + (η/2)·H_int`, whose ground state the sequence targets.
    pub fn target(&self, kind: GeometryKind, g_max: f64, eta: f64) -> Result<SparseOperator> {
        let a = hop_rate(kind, g_max);
        if eta == 0.0 || self.hop.basis().is_hardcore() {
            return SparseOperator::linear_combination(&[(a, &self.hop)], "H_target");
        }
        SparseOperator::linear_combination(&[(a, &self.hop), (0.5 * eta, &self.interaction)], "H_target")
    }
}

fn shaped_for_angle(angle: f64, rate: f64, sigma_ratio: f64, pad: f64) -> Result<Waveform> {
    if angle == 0.0 {
        return Ok(Waveform::empty());
    }
    if rate == 0.0 {
        return Err(Error::Parameter("nonzero angle with zero peak rate".into()));
    }
    let tau = (angle / rate).abs();
    Waveform::shaped(tau, sigma_ratio * tau, pad, rate.abs() * angle.signum())
}

/// Hop pulse followed by tilt pulse. The hop angle is `θ = ∫|α| dt`, with the
/// coefficient carrying the geometry's coupling sign; likewise for `φ`.
pub fn standard_prep_schedule(basis: &Arc<FockBasis>, ops: &PrepOperators, p: &PrepParams) -> Result<PulseSchedule> {
    let kind = basis.geometry().kind;
    if p.g_max <= 0.0 && p.theta != 0.0 {
        return Err(Error::Parameter("g_max must be positive".into()));
    }
    if p.delta_max <= 0.0 && p.phi != 0.0 {
        return Err(Error::Parameter("δ_max must be positive".into()));
    }
    let sign = coupling_sign(kind);
    let a_hop = hop_rate(kind, p.g_max.max(f64::MIN_POSITIVE));
    let a_tilt = tilt_rate(kind, p.delta_max.max(f64::MIN_POSITIVE));
    let hop_wave = shaped_for_angle(p.theta * sign, a_hop, p.sigma_ratio, p.pad)?;
    let tilt_wave = shaped_for_angle(p.phi * sign, a_tilt, p.sigma_ratio, p.pad)?;
    let eta = if basis.is_hardcore() { 0.0 } else { p.eta };
    let mut s = PulseSchedule::default();
    s.push(PulseSegment::new("hop", GeneratorKind::Hop, ops.hop.clone(), hop_wave).with_interaction(eta, ops.interaction.clone()));
    s.push(PulseSegment::new("tilt", GeneratorKind::Tilt, ops.tilt.clone(), tilt_wave).with_interaction(eta, ops.interaction.clone()));
    Ok(s)
}

/// Constant hop segment of the given duration, as used for probing.
pub fn probe_segment(ops: &PrepOperators, kind: GeometryKind, g_max: f64, eta: f64, duration: f64) -> PulseSegment {
    let eta = if ops.hop.basis().is_hardcore() { 0.0 } else { eta };
    PulseSegment::new("probe", GeneratorKind::Hop, ops.hop.clone(), Waveform::flat(duration, hop_rate(kind, g_max)))
        .with_interaction(eta, ops.interaction.clone())
}

/// Largest single-particle hop and tilt entries, re-exported for callers
/// that convert between peak rates and generator coefficients.
pub fn generator_extents(kind: GeometryKind) -> Result<(f64, f64)> {
    let g = match kind {
        GeometryKind::Chain1D { len } => crate::lattice::chain_geometry(len)?,
        GeometryKind::UniformChain { len } => crate::lattice::uniform_chain_geometry(len)?,
        GeometryKind::Triangular { ell } => crate::lattice::triangular_geometry(ell)?,
    };
    Ok((generator_max_hop(&g), generator_max_tilt(&g)))
}
