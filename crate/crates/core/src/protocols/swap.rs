use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{linspace, Axis, RunResult};
use crate::dense::unitary_real;
use crate::error::{Error, Result};
use crate::evolve::StaticPropagator;
use crate::fock::{FockBasis, HardcoreSites, StateVector, DEFAULT_DIMENSION_CAP};
use crate::lattice::{chain_geometry, GeometryKind};
use crate::operators::{chain_hop, chain_hop_amplitude, chain_tilt, interaction};
use crate::pulses::hop_rate;
use crate::sparse::{symmetric_hopping, SparseOperator};
use crate::units::mhz_to_angular;

/// Continuous hopping evolution from a product state, recording the
/// probability of the mirror-image pattern.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwapParams {
    pub len: usize,
    pub particles: usize,
    /// Central-bond coupling in rad/s.
    pub g_max: f64,
    /// Interaction in rad/s; `inf` for hard-core.
    #[serde(with = "super::extended::one")]
    pub eta: f64,
    /// Number of transfer peaks `t_k = (2k+1)π/α` covered by the time grid.
    pub peaks: usize,
    pub points: usize,
    pub initial: HardcoreSites,
    /// Defaults to `N`.
    pub n_max: Option<usize>,
    pub dimension_cap: usize,
}

impl Default for SwapParams {
    fn default() -> Self {
        Self {
            len: 8,
            particles: 4,
            g_max: mhz_to_angular(35.0),
            eta: mhz_to_angular(-270.0),
            peaks: 12,
            points: 1201,
            initial: HardcoreSites::Leading,
            n_max: None,
            dimension_cap: DEFAULT_DIMENSION_CAP,
        }
    }
}

/// Exponent `r = 2|Σ n_j (j − (L+1)/2)|` of the hard-core transfer law.
pub fn transfer_exponent(pattern: &[u8]) -> f64 {
    let tilt = chain_tilt(pattern.len());
    2.0 * pattern.iter().zip(&tilt).map(|(&n, z)| n as f64 * z).sum::<f64>().abs()
}

/// Hard-core probability `(sin²(αt/2))^r`.
pub fn hardcore_transmission(rate: f64, t: f64, exponent: f64) -> f64 {
    (0.5 * rate * t).sin().powi(2).powf(exponent)
}

struct Transfer {
    start: StateVector,
    mirror: usize,
    propagator: StaticPropagator,
}

impl Transfer {
    fn new(basis: Arc<FockBasis>, pattern: &[u8], rate: f64, eta: f64) -> Result<Self> {
        let hop = chain_hop(&basis)?;
        let h = if eta.is_finite() && eta != 0.0 && !basis.is_hardcore() {
            SparseOperator::linear_combination(&[(rate, &hop), (0.5 * eta, &interaction(&basis))], "H_swap")?
        } else {
            SparseOperator::linear_combination(&[(rate, &hop)], "H_swap")?
        };
        let mirrored: Vec<u8> = pattern.iter().rev().copied().collect();
        let mirror = basis.index_of(&mirrored).ok_or_else(|| Error::Input("mirror pattern outside the basis".into()))?;
        let start = StateVector::basis_state(basis, pattern)?;
        Ok(Self { start, mirror, propagator: StaticPropagator::new(Arc::new(h)) })
    }

    fn probabilities(&self, times: &[f64]) -> Result<Vec<f64>> {
        Ok(self.trace(times)?.0)
    }

    /// Mirror probabilities plus the worst norm drift along the grid.
    fn trace(&self, times: &[f64]) -> Result<(Vec<f64>, f64)> {
        let states = self.propagator.evolve_grid(&self.start, times)?;
        let drift = states.iter().map(|s| (s.norm() - 1.0).abs()).fold(0.0, f64::max);
        Ok((states.iter().map(|s| s.amps[self.mirror].norm_sqr()).collect(), drift))
    }
}

pub fn phiswap_transmission(p: &SwapParams) -> Result<RunResult> {
    if p.len < 2 || p.particles > p.len {
        return Err(Error::Parameter(format!("need 2 ≤ L and N ≤ L, got L={}, N={}", p.len, p.particles)));
    }
    if !(p.g_max > 0.0) || p.eta.is_nan() || p.peaks == 0 || p.points < 2 {
        return Err(Error::Parameter("g_max must be positive, η a number, and the grid non-empty".into()));
    }
    let start = Instant::now();
    let geometry = Arc::new(chain_geometry(p.len)?);
    let kind = GeometryKind::Chain1D { len: p.len };
    let rate = hop_rate(kind, p.g_max);
    let chosen = p.initial.resolve(&geometry, p.particles)?;
    let mut pattern = vec![0u8; p.len];
    chosen.iter().for_each(|&i| pattern[i] = 1);
    let exponent = transfer_exponent(&pattern);

    let hard_basis = Arc::new(FockBasis::with_cap(geometry.clone(), p.particles, 1, p.dimension_cap)?);
    let hard = Transfer::new(hard_basis, &pattern, rate, 0.0)?;
    let soft_basis = if p.eta.is_infinite() {
        None
    } else {
        let n_max = p.n_max.unwrap_or(p.particles).clamp(1, p.particles.max(1));
        Some(Arc::new(FockBasis::with_cap(geometry, p.particles, n_max, p.dimension_cap)?))
    };
    let soft = soft_basis.as_ref().map(|b| Transfer::new(b.clone(), &pattern, rate, p.eta)).transpose()?;

    let t_max = 2.0 * p.peaks as f64 * PI / rate;
    let times = linspace(0.0, t_max, p.points);
    let (hard_curve, hard_drift) = hard.trace(&times)?;
    let (curve, soft_drift) = match &soft {
        Some(s) => s.trace(&times)?,
        None => (hard_curve.clone(), 0.0),
    };
    let mut result = RunResult::new(
        "swap",
        vec![Axis::new("t", "s", times.clone())],
        &["transmission", "transmission_hardcore", "transmission_reference"],
    );
    let mut reference_deviation = 0.0f64;
    for ((&t, &pr), &ph) in times.iter().zip(&curve).zip(&hard_curve) {
        let reference = hardcore_transmission(rate, t, exponent);
        reference_deviation = reference_deviation.max((ph - reference).abs());
        result.push(&[t], &[pr, ph, reference]);
    }

    let peak_times: Vec<f64> = (0..p.peaks).map(|k| (2 * k + 1) as f64 * PI / rate).collect();
    let peaks = match &soft {
        Some(s) => s.probabilities(&peak_times)?,
        None => hard.probabilities(&peak_times)?,
    };
    let monotone = peaks.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    result.meta("parameters", p);
    result.meta("alpha_hop", rate);
    result.meta("pattern", pattern.iter().map(|n| n.to_string()).collect::<String>());
    result.meta("exponent", exponent);
    result.meta("dimension", soft_basis.as_ref().map_or(hard.start.dim(), |b| b.dim()));
    result.meta("peak_times_s", &peak_times);
    // the sector fixes N, so only the norm can drift
    result.meta("max_norm_drift", hard_drift.max(soft_drift));
    result.meta("max_number_drift", 0.0);
    result.meta("wall_time_s", start.elapsed().as_secs_f64());
    result.summarize("first_peak", peaks[0]);
    result.summarize("peaks", &peaks);
    result.summarize("envelope_monotone", monotone);
    result.summarize("max_hardcore_reference_deviation", reference_deviation);
    result.validate()?;
    Ok(result)
}

#[derive(Debug, Clone, Serialize)]
pub struct PatternCheck {
    pub check: String,
    pub len: usize,
    pub pattern: String,
    /// Sign of `θ` in `exp(−iθX)`.
    pub theta_sign: i8,
    pub expected_phase: f64,
    pub amplitude_deviation: f64,
    pub phase_deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GateCheckReport {
    pub max_len: usize,
    pub tolerance: f64,
    pub checks: Vec<PatternCheck>,
}

impl GateCheckReport {
    pub fn max_amplitude_deviation(&self) -> f64 {
        self.checks.iter().map(|c| c.amplitude_deviation).fold(0.0, f64::max)
    }

    pub fn max_phase_deviation(&self) -> f64 {
        self.checks.iter().map(|c| c.phase_deviation).fold(0.0, f64::max)
    }

    pub fn failures(&self) -> Vec<&PatternCheck> {
        self.checks
            .iter()
            .filter(|c| c.amplitude_deviation >= self.tolerance || c.phase_deviation >= self.tolerance)
            .collect()
    }

    pub fn passed(&self) -> bool {
        self.failures().is_empty()
    }
}

const GATE_TOLERANCE: f64 = 1e-6;

fn wrap_phase(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

fn pattern_string(p: &[u8]) -> String {
    p.iter().map(|n| n.to_string()).collect()
}

fn patterns(len: usize, particles: usize) -> Vec<Vec<u8>> {
    (0u32..1 << len)
        .filter(|m| m.count_ones() as usize == particles)
        .map(|m| (0..len).map(|j| ((m >> j) & 1) as u8).collect())
        .collect()
}

fn hardcore_basis(len: usize, particles: usize) -> Result<Arc<FockBasis>> {
    Ok(Arc::new(FockBasis::new(Arc::new(chain_geometry(len)?), particles, 1)?))
}

fn compare(
    check: &str,
    basis: &FockBasis,
    out: &[Complex64],
    input: &[u8],
    expected: &[u8],
    sign: i8,
    amplitude: Complex64,
) -> PatternCheck {
    let k = basis.index_of(expected).expect("expected pattern in basis");
    let leak: f64 = out.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, a)| a.norm_sqr()).sum();
    let got = out[k];
    PatternCheck {
        check: check.into(),
        len: input.len(),
        pattern: pattern_string(input),
        theta_sign: sign,
        expected_phase: amplitude.arg(),
        amplitude_deviation: (got.norm() - 1.0).abs().max(leak.sqrt()),
        phase_deviation: wrap_phase(got.arg() - amplitude.arg()).abs(),
    }
}

/// The empty chain: every hopping operator vanishes, so any gate is the identity.
fn vacuum_check(check: &str, len: usize, sign: i8) -> PatternCheck {
    PatternCheck {
        check: check.into(),
        len,
        pattern: "0".repeat(len),
        theta_sign: sign,
        expected_phase: 0.0,
        amplitude_deviation: 0.0,
        phase_deviation: 0.0,
    }
}

/// `exp(−iθX)` applied to a hard-core pattern at `θ = sign·π`, compared with
/// the reversed pattern times `exp(−i·sign·N(L−N)π/2)`.
pub fn check_pattern(pattern: &[u8], sign: i8) -> Result<PatternCheck> {
    let len = pattern.len();
    if pattern.iter().any(|&b| b > 1) {
        return Err(Error::Input(format!("not a hard-core pattern: {pattern:?}")));
    }
    let n = pattern.iter().filter(|&&b| b == 1).count();
    if n == 0 {
        return Ok(vacuum_check("phiswap", len, sign));
    }
    let basis = hardcore_basis(len, n)?;
    let u = unitary_real(&chain_hop(&basis)?.to_dense_real().expect("real hop"), sign as f64 * PI);
    let k = basis.index_of(pattern).ok_or_else(|| Error::Input(format!("not a hard-core pattern: {pattern:?}")))?;
    let out: Vec<Complex64> = u.column(k).iter().copied().collect();
    let reversed: Vec<u8> = pattern.iter().rev().copied().collect();
    let phase = -(sign as f64) * (n * (len - n)) as f64 * PI / 2.0;
    Ok(compare("phiswap", &basis, &out, pattern, &reversed, sign, Complex64::from_polar(1.0, phase)))
}

/// Swap of the end sites of a five-site chain: the three-site ΦSWAP on the
/// interior sites after the full ΦSWAP.
fn fswap_checks(sign: i8) -> Result<Vec<PatternCheck>> {
    const LEN: usize = 5;
    let mut out = Vec::new();
    out.push(vacuum_check("fswap_1_5", LEN, sign));
    for n in 1..=LEN {
        let basis = hardcore_basis(LEN, n)?;
        let full = unitary_real(&chain_hop(&basis)?.to_dense_real().expect("real hop"), sign as f64 * PI);
        let pairs: Vec<(usize, usize, f64)> = (1..3).map(|j| (j, j + 1, chain_hop_amplitude(3, j))).collect();
        let inner = symmetric_hopping(&basis, &pairs, "X_inner");
        let inner = unitary_real(&inner.to_dense_real().expect("real hop"), sign as f64 * PI);
        let gate = inner * full;
        for pattern in patterns(LEN, n) {
            let k = basis.index_of(&pattern).expect("pattern in basis");
            let col: Vec<Complex64> = gate.column(k).iter().copied().collect();
            let mut swapped = pattern.clone();
            swapped.swap(0, LEN - 1);
            let middle: usize = pattern[1..LEN - 1].iter().map(|&b| b as usize).sum();
            let phase = match pattern[0] + pattern[LEN - 1] {
                0 => 0.0,
                1 => PI * middle as f64 + (LEN - 1) as f64 * PI / 2.0,
                _ => PI * LEN as f64,
            };
            let sign_factor = if middle % 2 == 0 { 1.0 } else { -1.0 };
            let amplitude = Complex64::from_polar(sign_factor, phase);
            out.push(compare("fswap_1_5", &basis, &col, &pattern, &swapped, sign, amplitude));
        }
    }
    Ok(out)
}

/// Phase law of the `θ = ±π` hopping pulse for every hard-core pattern with
/// `2 ≤ L ≤ max_len`, plus the end-site swap table at `L = 5`.
pub fn phiswap_gate_check(max_len: usize) -> Result<GateCheckReport> {
    if max_len < 2 || max_len > 16 {
        return Err(Error::Parameter(format!("max_len must lie in 2..=16, got {max_len}")));
    }
    let mut checks = Vec::new();
    for len in 2..=max_len {
        for n in 0..=len {
            for pattern in patterns(len, n) {
                for sign in [-1i8, 1] {
                    checks.push(check_pattern(&pattern, sign)?);
                }
            }
        }
    }
    for sign in [-1i8, 1] {
        checks.extend(fswap_checks(sign)?);
    }
    Ok(GateCheckReport { max_len, tolerance: GATE_TOLERANCE, checks })
}

impl GateCheckReport {
    /// One record per check, for the CSV contract.
    pub fn to_run_result(&self) -> Result<RunResult> {
        let index: Vec<f64> = (0..self.checks.len()).map(|i| i as f64).collect();
        let mut r = RunResult::new(
            "swap_gate_check",
            vec![Axis::new("check_index", "", index)],
            &["len", "theta_sign", "expected_phase", "amplitude_deviation", "phase_deviation"],
        );
        for (i, c) in self.checks.iter().enumerate() {
            r.push(
                &[i as f64],
                &[c.len as f64, c.theta_sign as f64, c.expected_phase, c.amplitude_deviation, c.phase_deviation],
            );
        }
        r.meta("checks", &self.checks);
        r.meta("tolerance", self.tolerance);
        r.summarize("patterns_checked", self.checks.len());
        r.summarize("max_amplitude_deviation", self.max_amplitude_deviation());
        r.summarize("max_phase_deviation", self.max_phase_deviation());
        r.summarize("passed", self.passed());
        r.validate()?;
        Ok(r)
    }
}
