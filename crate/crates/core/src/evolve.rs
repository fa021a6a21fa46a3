//! Ground states and time evolution.
//!
//! Segments are integrated with a fixed number of steps whose Hamiltonian is
//! sampled at the step midpoint. Each step is applied exactly (Krylov or dense
//! exponential) or by Strang splitting into on-site and per-bond factors.
//! Segments made only of diagonal terms are applied as exact phases.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dense::{eigh_complex, eigh_real, DENSE_LIMIT};
use crate::error::{Error, Result};
use crate::fock::{FockBasis, StateVector};
use crate::krylov::{expm_action, KrylovOptions};
use crate::lanczos::{lowest_eigenpair, LanczosOptions};
use crate::pulses::{PulseSchedule, PulseSegment};
use crate::sparse::{Csr, SparseOperator};

/// Below this dimension time steps use dense eigendecompositions.
pub const DENSE_STEP_LIMIT: usize = 64;
/// Below this dimension ground states use dense eigendecompositions.
pub const DENSE_GROUND_LIMIT: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    KrylovExpm,
    DenseExpm,
    SplitStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionConfig {
    pub steps_per_segment: usize,
    pub method: Method,
    /// Infidelity between successive step doublings accepted as converged.
    pub tolerance: f64,
    pub auto_refine: bool,
    pub max_steps: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self { steps_per_segment: 200, method: Method::KrylovExpm, tolerance: 1e-7, auto_refine: true, max_steps: 6400 }
    }
}

impl EvolutionConfig {
    pub fn fixed(steps: usize) -> Self {
        Self { steps_per_segment: steps, auto_refine: false, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps_per_segment < 50 {
            return Err(Error::Parameter(format!("steps_per_segment must be >= 50, got {}", self.steps_per_segment)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Parameter("tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SegmentReport {
    pub label: String,
    /// Steps of the accepted integration; 0 for exact diagonal segments.
    pub steps: usize,
    /// Infidelity between the last two step counts, when refinement ran.
    pub refinement_change: Option<f64>,
    /// False when doubling up to `max_steps` never met the tolerance.
    pub converged: bool,
    pub norm_drift: f64,
    /// `|Σ_i ⟨n_i⟩ − N‖ψ_in‖²|` after the segment.
    pub number_drift: f64,
}

fn fix_phase(v: &mut [Complex64]) {
    if let Some(big) = v.iter().copied().max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr())) {
        if big.norm() > 0.0 {
            let ph = big.conj() / big.norm();
            v.iter_mut().for_each(|x| *x *= ph);
        }
    }
}

/// `y += H x` for a real operator, on real vectors.
fn real_apply(op: &SparseOperator, x: &[f64], y: &mut [f64]) {
    let s = op.scale.re;
    if let Some(d) = &op.diag {
        for ((yi, xi), di) in y.iter_mut().zip(x).zip(d) {
            *yi += s * xi * di;
        }
    }
    if let Some(a) = &op.off {
        a.axpy_real(s, x, y);
    }
}

/// Lowest eigenpair of a Hermitian operator. The phase is fixed so the
/// largest-magnitude amplitude is real and positive. The residual check is
/// relative to the ground energy when that exceeds one.
pub fn ground_state(h: &SparseOperator) -> Result<(f64, StateVector)> {
    let n = h.dim();
    let basis = h.basis().clone();
    let (energy, mut amps) = if h.is_real() {
        if n <= DENSE_GROUND_LIMIT {
            let (vals, vecs) = eigh_real(&h.to_dense_real().expect("real operator"));
            (vals[0], vecs.column(0).iter().map(|&v| Complex64::new(v, 0.0)).collect::<Vec<_>>())
        } else {
            let (e, v) = lowest_eigenpair(n, |x, y| real_apply(h, x, y), LanczosOptions::default())?;
            (e, v.into_iter().map(|x| Complex64::new(x, 0.0)).collect())
        }
    } else if n <= DENSE_LIMIT {
        let (vals, vecs) = eigh_complex(&h.to_dense());
        (vals[0], vecs.column(0).iter().copied().collect())
    } else {
        return Err(Error::Unsupported("complex ground states above the dense limit".into()));
    };
    fix_phase(&mut amps);
    let hv = h.apply(&amps);
    let residual = hv.iter().zip(&amps).map(|(a, b)| (a - b * energy).norm_sqr()).sum::<f64>().sqrt();
    if residual > 1e-9 * energy.abs().max(1.0) {
        return Err(Error::Solver { iterations: 0, residual });
    }
    Ok((energy, StateVector::from_amplitudes(basis, amps)?))
}

/// The Hamiltonian of one step: merged diagonal plus weighted off-diagonal parts.
struct StepHamiltonian<'a> {
    diag: Vec<f64>,
    offs: Vec<(f64, &'a Csr)>,
    complex: Vec<(f64, &'a SparseOperator)>,
}

impl<'a> StepHamiltonian<'a> {
    fn new(n: usize, terms: &[(f64, &'a SparseOperator)]) -> Self {
        let mut diag = vec![0.0; n];
        let mut offs = Vec::new();
        let mut complex = Vec::new();
        for &(c, op) in terms {
            if !op.is_real() {
                complex.push((c, op));
                continue;
            }
            let w = c * op.scale.re;
            if w == 0.0 {
                continue;
            }
            if let Some(d) = &op.diag {
                diag.iter_mut().zip(d).for_each(|(a, v)| *a += w * v);
            }
            if let Some(a) = &op.off {
                offs.push((w, a));
            }
        }
        Self { diag, offs, complex }
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        for ((yi, xi), d) in y.iter_mut().zip(x).zip(&self.diag) {
            *yi += xi * *d;
        }
        for &(w, a) in &self.offs {
            a.axpy_complex(w, x, y);
        }
        for &(c, op) in &self.complex {
            op.apply_add(Complex64::new(c, 0.0), x, y);
        }
    }
}

/// Dense copies of each segment term, reused across steps. Real terms use
/// the real symmetric eigensolver.
enum DenseTerms {
    Real(Vec<DMatrix<f64>>),
    Complex(Vec<DMatrix<Complex64>>),
}

impl DenseTerms {
    fn new(seg: &PulseSegment) -> Self {
        let terms = seg.terms_at(0.0);
        if terms.iter().all(|(_, op)| op.is_real()) {
            Self::Real(terms.iter().map(|(_, op)| op.to_dense_real().expect("real operator")).collect())
        } else {
            Self::Complex(terms.iter().map(|(_, op)| op.to_dense()).collect())
        }
    }

    fn step(&self, coeffs: &[f64], dt: f64, psi: &mut [Complex64]) {
        let n = psi.len();
        let v = DVector::from_column_slice(psi);
        let out = match self {
            Self::Real(mats) => {
                let mut h = DMatrix::<f64>::zeros(n, n);
                for (m, &c) in mats.iter().zip(coeffs) {
                    if c != 0.0 {
                        h += m * c;
                    }
                }
                let (vals, vecs) = eigh_real(&h);
                let re = vecs.transpose() * v.map(|z| z.re);
                let im = vecs.transpose() * v.map(|z| z.im);
                let c = DVector::from_iterator(
                    n,
                    (0..n).map(|k| Complex64::new(re[k], im[k]) * Complex64::from_polar(1.0, -dt * vals[k])),
                );
                let (cr, ci) = (c.map(|z| z.re), c.map(|z| z.im));
                let (r, i) = (&vecs * cr, &vecs * ci);
                DVector::from_iterator(n, (0..n).map(|k| Complex64::new(r[k], i[k])))
            }
            Self::Complex(mats) => {
                let mut h = DMatrix::<Complex64>::zeros(n, n);
                for (m, &c) in mats.iter().zip(coeffs) {
                    if c != 0.0 {
                        h += m * Complex64::new(c, 0.0);
                    }
                }
                let (vals, vecs) = eigh_complex(&h);
                let mut c = vecs.adjoint() * v;
                for (ci, e) in c.iter_mut().zip(vals.iter()) {
                    *ci *= Complex64::from_polar(1.0, -dt * e);
                }
                vecs * c
            }
        };
        psi.copy_from_slice(out.as_slice());
    }
}

/// Per-bond orbits `{(a, m−a)}` of the two-site occupation, for splitting.
struct BondOrbits {
    /// For each orbit: starting `n_i`, total `m`, member indices by descending `n_i`.
    orbits: Vec<(u8, u8, Vec<u32>)>,
}

impl BondOrbits {
    fn new(basis: &FockBasis, i: usize, j: usize) -> Self {
        let n_max = basis.n_max() as u8;
        let mut orbits = Vec::new();
        let mut buf = vec![0u8; basis.num_sites()];
        for k in 0..basis.dim() {
            let occ = basis.state(k);
            let m = occ[i] + occ[j];
            // orbit representative: n_i as large as allowed
            if occ[i] != m.min(n_max) {
                continue;
            }
            let mut members = vec![k as u32];
            buf.copy_from_slice(occ);
            while buf[i] > 0 && buf[j] < n_max {
                buf[i] -= 1;
                buf[j] += 1;
                members.push(basis.index_of(&buf).expect("orbit member") as u32);
            }
            if members.len() > 1 {
                orbits.push((occ[i], m, members));
            }
        }
        Self { orbits }
    }
}

struct SplitTerms {
    /// `(term index, i, j, g)` for every bond of every hopping term.
    bonds: Vec<(usize, usize, usize, f64)>,
    orbits: Vec<BondOrbits>,
    diag_terms: Vec<usize>,
}

impl SplitTerms {
    fn new(seg: &PulseSegment) -> Result<Self> {
        let basis = seg.basis();
        let mut bonds = Vec::new();
        let mut diag_terms = Vec::new();
        for (t, (_, op)) in seg.terms_at(0.0).iter().enumerate() {
            if !op.is_real() {
                return Err(Error::Unsupported("split-step needs real operators".into()));
            }
            if op.diag.is_some() {
                diag_terms.push(t);
            }
            if !op.is_diagonal() {
                let pairs = op.pairs.as_ref().ok_or_else(|| {
                    Error::Unsupported(format!("split-step needs a bond list for {}", op.label))
                })?;
                for &(i, j, g) in pairs {
                    bonds.push((t, i, j, g * op.scale.re));
                }
            }
        }
        let orbits = bonds.iter().map(|&(_, i, j, _)| BondOrbits::new(basis, i, j)).collect();
        Ok(Self { bonds, orbits, diag_terms })
    }

    fn apply_bond(&self, b: usize, coeff: f64, dt: f64, psi: &mut [Complex64]) {
        let g = coeff * self.bonds[b].3;
        if g == 0.0 {
            return;
        }
        let mut cache: HashMap<(u8, u8, usize), DMatrix<Complex64>> = HashMap::new();
        for (a0, m, members) in &self.orbits[b].orbits {
            let len = members.len();
            let u = cache.entry((*a0, *m, len)).or_insert_with(|| {
                let mut h = DMatrix::<f64>::zeros(len, len);
                for r in 0..len - 1 {
                    let a = (*a0 as usize - r) as f64;
                    let v = g * (a * (*m as f64 - a + 1.0)).sqrt();
                    h[(r, r + 1)] = v;
                    h[(r + 1, r)] = v;
                }
                crate::dense::unitary_real(&h, dt)
            });
            let old: Vec<Complex64> = members.iter().map(|&k| psi[k as usize]).collect();
            for (r, &k) in members.iter().enumerate() {
                psi[k as usize] = (0..len).map(|c| u[(r, c)] * old[c]).sum();
            }
        }
    }

    fn step(&self, seg: &PulseSegment, coeffs: &[f64], dt: f64, psi: &mut [Complex64]) {
        let terms = seg.terms_at(0.0);
        let mut diag = vec![0.0; psi.len()];
        for &t in &self.diag_terms {
            let (_, op) = terms[t];
            let w = coeffs[t] * op.scale.re;
            if let Some(d) = &op.diag {
                diag.iter_mut().zip(d).for_each(|(a, v)| *a += w * v);
            }
        }
        let half_phase = |psi: &mut [Complex64]| {
            for (p, d) in psi.iter_mut().zip(&diag) {
                *p *= Complex64::from_polar(1.0, -0.5 * dt * d);
            }
        };
        half_phase(psi);
        for b in 0..self.bonds.len() {
            self.apply_bond(b, coeffs[self.bonds[b].0], 0.5 * dt, psi);
        }
        for b in (0..self.bonds.len()).rev() {
            self.apply_bond(b, coeffs[self.bonds[b].0], 0.5 * dt, psi);
        }
        half_phase(psi);
    }
}

fn exact_diagonal(psi: &StateVector, seg: &PulseSegment) -> StateVector {
    let mut phase = vec![0.0; psi.dim()];
    for (c, op) in seg.integrated_terms() {
        let w = c * op.scale.re;
        if let Some(d) = &op.diag {
            phase.iter_mut().zip(d).for_each(|(p, v)| *p += w * v);
        }
    }
    let mut out = psi.clone();
    for (a, p) in out.amps.iter_mut().zip(&phase) {
        *a *= Complex64::from_polar(1.0, -p);
    }
    out
}

type Observer<'o> = &'o mut dyn FnMut(f64, &[Complex64]);

fn propagate(
    psi: &StateVector,
    seg: &PulseSegment,
    steps: usize,
    method: Method,
    mut observer: Option<Observer<'_>>,
) -> Result<StateVector> {
    let n = psi.dim();
    let total = seg.duration();
    let dt = total / steps as f64;
    let method = match method {
        Method::KrylovExpm if n <= DENSE_STEP_LIMIT => Method::DenseExpm,
        m => m,
    };
    if method == Method::DenseExpm && n > DENSE_LIMIT {
        return Err(Error::Unsupported(format!("dense stepping above dimension {DENSE_LIMIT}")));
    }
    let dense = (method == Method::DenseExpm).then(|| DenseTerms::new(seg));
    let split = if method == Method::SplitStep { Some(SplitTerms::new(seg)?) } else { None };
    let mut cur = psi.amps.clone();
    for k in 0..steps {
        let t_mid = (k as f64 + 0.5) * dt;
        let terms = seg.terms_at(t_mid);
        match method {
            Method::KrylovExpm => {
                let h = StepHamiltonian::new(n, &terms);
                cur = expm_action(|x, y| h.apply(x, y), &cur, dt, KrylovOptions::default())?;
            }
            Method::DenseExpm => {
                let coeffs: Vec<f64> = terms.iter().map(|(c, _)| *c).collect();
                dense.as_ref().unwrap().step(&coeffs, dt, &mut cur);
            }
            Method::SplitStep => {
                let coeffs: Vec<f64> = terms.iter().map(|(c, _)| *c).collect();
                split.as_ref().unwrap().step(seg, &coeffs, dt, &mut cur);
            }
        }
        if let Some(obs) = observer.as_mut() {
            obs((k + 1) as f64 * dt, &cur);
        }
    }
    StateVector::from_amplitudes(psi.basis().clone(), cur)
}

/// Evolves through one segment, doubling the step count until successive
/// results agree to `cfg.tolerance` when `cfg.auto_refine` is set.
pub fn evolve_segment(psi: &StateVector, seg: &PulseSegment, cfg: &EvolutionConfig) -> Result<(StateVector, SegmentReport)> {
    cfg.validate()?;
    let norm_in = psi.norm();
    let expected_number = psi.basis().particles() as f64 * norm_in * norm_in;
    let report = |out: &StateVector, steps, change, converged| SegmentReport {
        label: seg.label.clone(),
        steps,
        refinement_change: change,
        converged,
        norm_drift: (out.norm() - norm_in).abs(),
        number_drift: (out.density_profile().iter().sum::<f64>() - expected_number).abs(),
    };
    if seg.duration() == 0.0 {
        return Ok((psi.clone(), report(psi, 0, None, true)));
    }
    if seg.is_diagonal() {
        let out = exact_diagonal(psi, seg);
        let r = report(&out, 0, None, true);
        return Ok((out, r));
    }
    let mut steps = cfg.steps_per_segment;
    let mut out = propagate(psi, seg, steps, cfg.method, None)?;
    if !cfg.auto_refine {
        let r = report(&out, steps, None, true);
        return Ok((out, r));
    }
    loop {
        if steps * 2 > cfg.max_steps {
            let r = report(&out, steps, None, false);
            return Ok((out, r));
        }
        let finer = propagate(psi, seg, steps * 2, cfg.method, None)?;
        let change = 1.0 - out.fidelity(&finer) / (out.norm() * finer.norm()).powi(2);
        steps *= 2;
        out = finer;
        if change.abs() < cfg.tolerance {
            let r = report(&out, steps, Some(change.abs()), true);
            return Ok((out, r));
        }
        if steps * 2 > cfg.max_steps {
            let r = report(&out, steps, Some(change.abs()), false);
            return Ok((out, r));
        }
    }
}

/// Fixed-step evolution that reports the state after every step.
pub fn evolve_segment_observed(
    psi: &StateVector,
    seg: &PulseSegment,
    cfg: &EvolutionConfig,
    observer: &mut dyn FnMut(f64, &[Complex64]),
) -> Result<StateVector> {
    cfg.validate()?;
    if seg.duration() == 0.0 {
        return Ok(psi.clone());
    }
    propagate(psi, seg, cfg.steps_per_segment, cfg.method, Some(observer))
}

pub fn evolve_schedule(psi: &StateVector, schedule: &PulseSchedule, cfg: &EvolutionConfig) -> Result<(StateVector, Vec<SegmentReport>)> {
    let mut cur = psi.clone();
    let mut reports = Vec::with_capacity(schedule.segments.len());
    for seg in &schedule.segments {
        let (next, r) = evolve_segment(&cur, seg, cfg)?;
        cur = next;
        reports.push(r);
    }
    Ok((cur, reports))
}

/// `exp(−iHt)` for a fixed Hamiltonian, reusing a dense eigendecomposition
/// on small sectors.
pub struct StaticPropagator {
    op: Arc<SparseOperator>,
    eigen: Option<(DVector<f64>, DMatrix<Complex64>)>,
}

impl StaticPropagator {
    pub fn new(h: Arc<SparseOperator>) -> Self {
        let eigen = (h.dim() <= DENSE_LIMIT).then(|| match h.to_dense_real() {
            Some(m) => {
                let (v, vecs) = eigh_real(&m);
                (v, vecs.map(|x| Complex64::new(x, 0.0)))
            }
            None => eigh_complex(&h.to_dense()),
        });
        Self { op: h, eigen }
    }

    pub fn evolve(&self, psi: &StateVector, t: f64) -> Result<StateVector> {
        let amps = match &self.eigen {
            Some((vals, vecs)) => {
                let mut c = vecs.adjoint() * DVector::from_column_slice(&psi.amps);
                for (ci, e) in c.iter_mut().zip(vals.iter()) {
                    *ci *= Complex64::from_polar(1.0, -t * e);
                }
                (vecs * c).as_slice().to_vec()
            }
            None => {
                let op = self.op.clone();
                expm_action(
                    move |x: &[Complex64], y: &mut [Complex64]| op.apply_add(Complex64::new(1.0, 0.0), x, y),
                    &psi.amps,
                    t,
                    KrylovOptions::default(),
                )?
            }
        };
        StateVector::from_amplitudes(psi.basis().clone(), amps)
    }

    /// States at each time of a non-decreasing grid.
    pub fn evolve_grid(&self, psi: &StateVector, times: &[f64]) -> Result<Vec<StateVector>> {
        if self.eigen.is_some() {
            return times.iter().map(|&t| self.evolve(psi, t)).collect();
        }
        let mut out = Vec::with_capacity(times.len());
        let mut cur = psi.clone();
        let mut last = 0.0;
        for &t in times {
            cur = self.evolve(&cur, t - last)?;
            last = t;
            out.push(cur.clone());
        }
        Ok(out)
    }
}

/// `exp(−iHt)ψ`.
pub fn evolve_static(psi: &StateVector, h: &SparseOperator, t: f64) -> Result<StateVector> {
    if h.dim() <= DENSE_STEP_LIMIT {
        return StaticPropagator::new(Arc::new(h.clone())).evolve(psi, t);
    }
    let amps = expm_action(|x, y| h.apply_add(Complex64::new(1.0, 0.0), x, y), &psi.amps, t, KrylovOptions::default())?;
    StateVector::from_amplitudes(psi.basis().clone(), amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::HardcoreSites;
    use crate::lattice::chain_geometry;
    use crate::operators::{chain_hop, interaction, many_body_generators};
    use crate::pulses::{GeneratorKind, PrepOperators, PrepParams, standard_prep_schedule, Waveform};
    use std::f64::consts::PI;

    fn chain_basis(len: usize, n: usize, cap: usize) -> Arc<FockBasis> {
        Arc::new(FockBasis::new(Arc::new(chain_geometry(len).unwrap()), n, cap).unwrap())
    }

    #[test]
    fn config_validation() {
        assert!(EvolutionConfig::fixed(10).validate().is_err());
        assert!(EvolutionConfig { tolerance: 0.0, ..Default::default() }.validate().is_err());
        assert!(EvolutionConfig::default().validate().is_ok());
    }

    #[test]
    fn two_site_ground_state() {
        let b = chain_basis(2, 1, 1);
        let (e, psi) = ground_state(&chain_hop(&b).unwrap()).unwrap();
        assert!((e + 0.5).abs() < 1e-14);
        let s = 0.5f64.sqrt();
        assert!((psi.amps[0].re.abs() - s).abs() < 1e-12);
        assert!((psi.amps[0] + psi.amps[1]).norm() < 1e-12);
    }

    #[test]
    fn single_particle_ground_energy() {
        for len in [5, 9, 30] {
            let b = chain_basis(len, 1, 1);
            let (e, _) = ground_state(&chain_hop(&b).unwrap()).unwrap();
            assert!((e + (len as f64 - 1.0) / 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn hardcore_ground_energy() {
        let b = chain_basis(8, 4, 1);
        let (e, _) = ground_state(&chain_hop(&b).unwrap()).unwrap();
        assert!((e + 8.0).abs() < 1e-10);
    }

    #[test]
    fn lanczos_path_matches_dense() {
        let b = chain_basis(10, 4, 4);
        assert!(b.dim() > DENSE_GROUND_LIMIT);
        let x = chain_hop(&b).unwrap();
        let hint = interaction(&b);
        let h = SparseOperator::linear_combination(&[(1.0, &x), (1.3, &hint)], "H").unwrap();
        let (e, psi) = ground_state(&h).unwrap();
        let (vals, _) = eigh_real(&h.to_dense_real().unwrap());
        assert!((e - vals[0]).abs() < 1e-10);
        assert!((psi.norm() - 1.0).abs() < 1e-12);
    }

    fn single_hop_segment(b: &Arc<FockBasis>, angle: f64) -> PulseSegment {
        let x = Arc::new(chain_hop(b).unwrap());
        let tau = angle;
        PulseSegment::new("hop", GeneratorKind::Hop, x, Waveform::new(tau, 1.0))
    }

    #[test]
    fn two_site_transfer() {
        let b = chain_basis(2, 1, 1);
        let seg = single_hop_segment(&b, PI);
        let psi = StateVector::basis_state(b.clone(), &[1, 0]).unwrap();
        let (out, rep) = evolve_segment(&psi, &seg, &EvolutionConfig::default()).unwrap();
        assert!(out.amps[1].norm() > 1.0 - 1e-6);
        assert!(rep.norm_drift < 1e-9);
    }

    #[test]
    fn static_half_transfer() {
        let b = chain_basis(2, 1, 1);
        let x = chain_hop(&b).unwrap();
        let psi = StateVector::basis_state(b, &[1, 0]).unwrap();
        let out = evolve_static(&psi, &x, PI / 2.0).unwrap();
        let rho = out.density_profile();
        assert!((rho[0] - 0.5).abs() < 1e-12 && (rho[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn eigenstate_is_stationary() {
        let b = chain_basis(6, 3, 3);
        let x = chain_hop(&b).unwrap();
        let hint = interaction(&b);
        let h = SparseOperator::linear_combination(&[(0.7, &x), (2.0, &hint)], "H").unwrap();
        let (e0, gs) = ground_state(&h).unwrap();
        let rho0 = gs.density_profile();
        for t in [0.3, 2.0, 11.0] {
            let out = evolve_static(&gs, &h, t).unwrap();
            let rho = out.density_profile();
            assert!(rho.iter().zip(&rho0).all(|(a, b)| (a - b).abs() < 1e-9));
            assert!((h.expectation(&out.amps).re - e0).abs() < 1e-9);
        }
    }

    #[test]
    fn static_step_doubling_is_consistent() {
        let b = chain_basis(7, 3, 3);
        let x = chain_hop(&b).unwrap();
        let psi = StateVector::condensate(b).unwrap();
        let once = evolve_static(&psi, &x, 2.0).unwrap();
        let half = evolve_static(&psi, &x, 1.0).unwrap();
        let twice = evolve_static(&half, &x, 1.0).unwrap();
        let diff = once.amps.iter().zip(&twice.amps).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-8);
    }

    #[test]
    fn methods_agree() {
        let b = chain_basis(5, 3, 3);
        let ops = PrepOperators::build(&b).unwrap();
        let p = PrepParams::for_geometry(b.geometry().kind, 1.0, 0.8);
        let sched = standard_prep_schedule(&b, &ops, &p).unwrap();
        let seg = &sched.segments[0];
        let psi = StateVector::hardcore(b.clone(), &HardcoreSites::Leading).unwrap();
        let run = |m| evolve_segment(&psi, seg, &EvolutionConfig { method: m, ..EvolutionConfig::fixed(200) }).unwrap().0;
        let k = run(Method::KrylovExpm);
        let d = run(Method::DenseExpm);
        let s = run(Method::SplitStep);
        assert!(1.0 - k.fidelity(&d) < 1e-12);
        assert!(1.0 - k.fidelity(&s) < 1e-6, "{}", 1.0 - k.fidelity(&s));
    }

    #[test]
    fn krylov_path_on_larger_sector() {
        let b = chain_basis(8, 4, 4);
        assert!(b.dim() > DENSE_STEP_LIMIT);
        let ops = PrepOperators::build(&b).unwrap();
        let p = PrepParams::for_geometry(b.geometry().kind, 1.0, 1.5);
        let sched = standard_prep_schedule(&b, &ops, &p).unwrap();
        let psi = StateVector::condensate(b.clone()).unwrap();
        let fixed = EvolutionConfig::fixed(800);
        let k = evolve_segment(&psi, &sched.segments[0], &fixed).unwrap().0;
        let s = evolve_segment(&psi, &sched.segments[0], &EvolutionConfig { method: Method::SplitStep, ..fixed }).unwrap().0;
        assert!(1.0 - k.fidelity(&s) < 1e-6);
        let (_, rep) = evolve_segment(&psi, &sched.segments[0], &EvolutionConfig::default()).unwrap();
        assert!(rep.converged && rep.steps >= 400);
        assert!(rep.norm_drift < 1e-9);
    }

    #[test]
    fn diagonal_segments_are_exact() {
        let b = chain_basis(4, 2, 2);
        let lift = many_body_generators(&b).unwrap();
        let z = Arc::new(lift.z);
        let seg = PulseSegment::new("tilt", GeneratorKind::Tilt, z, Waveform::new(0.7, 2.0));
        let psi = StateVector::basis_state(b.clone(), &[1, 0, 0, 1]).unwrap();
        let (out, rep) = evolve_segment(&psi, &seg, &EvolutionConfig::default()).unwrap();
        assert_eq!(rep.steps, 0);
        assert!((out.amps[b.index_of(&[1, 0, 0, 1]).unwrap()].norm() - 1.0).abs() < 1e-15);
    }
}
