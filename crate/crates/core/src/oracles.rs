//! Independent checks: single-particle reductions of the many-body dynamics,
//! Slater-determinant overlaps for hard-core chains, and the SU(2)/SU(3)
//! identities as finite matrices.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::dense::{commutator, eigh_real, max_abs_diff, to_complex, unitary_real};
use crate::error::{Error, Result};
use crate::lattice::{triangular_index, triangular_sites, Geometry};
use crate::operators::{
    chain_hop_matrix, chain_tilt, generator_bond_amplitudes, site_tilt, su2_generators, su3_generators,
};
use crate::pulses::{GeneratorKind, PulseSchedule};

/// Gram-matrix deviation tolerated for orbital sets.
pub const GRAM_TOLERANCE: f64 = 1e-8;

/// Single-particle hopping matrix of the engineered generator on a geometry.
pub fn hop_matrix(geometry: &Geometry) -> DMatrix<f64> {
    let n = geometry.num_sites();
    let mut m = DMatrix::zeros(n, n);
    for (b, a) in geometry.bonds.iter().zip(generator_bond_amplitudes(geometry)) {
        m[(b.i, b.j)] = a;
        m[(b.j, b.i)] = a;
    }
    m
}

/// A unitary over the sites of a lattice.
#[derive(Debug, Clone)]
pub struct SingleParticlePropagator {
    pub matrix: DMatrix<Complex64>,
}

impl SingleParticlePropagator {
    pub fn identity(sites: usize) -> Self {
        Self { matrix: DMatrix::identity(sites, sites) }
    }

    /// Product of `exp(−i·area·G)` over the segments, where `G` is the
    /// single-particle form of each segment's generator. Interactions and
    /// extra terms are ignored; callers decide whether that is legitimate.
    pub fn from_schedule(schedule: &PulseSchedule, geometry: &Geometry) -> Result<Self> {
        let mut u = Self::identity(geometry.num_sites());
        for seg in &schedule.segments {
            let g = match seg.kind {
                GeneratorKind::Hop => hop_matrix(geometry),
                GeneratorKind::Tilt => DMatrix::from_diagonal(&DVector::from_vec(site_tilt(geometry))),
                other => return Err(Error::Unsupported(format!("no single-particle form for {other:?} segments"))),
            };
            let angle = seg.waveform.area() * seg.generator.scale.re;
            u.matrix = unitary_real(&g, angle) * &u.matrix;
        }
        Ok(u)
    }

    pub fn unitarity_defect(&self) -> f64 {
        let n = self.matrix.nrows();
        max_abs_diff(&(self.matrix.adjoint() * &self.matrix), &DMatrix::identity(n, n))
    }

    pub fn apply(&self, orbitals: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        &self.matrix * orbitals
    }
}

fn check_bare_schedule(schedule: &PulseSchedule) -> Result<()> {
    for seg in &schedule.segments {
        if seg.interaction.is_some() && seg.eta != 0.0 {
            return Err(Error::Misuse(format!("segment '{}' is interacting (η = {})", seg.label, seg.eta)));
        }
        if !seg.extra.is_empty() {
            return Err(Error::Misuse(format!("segment '{}' carries extra terms", seg.label)));
        }
    }
    Ok(())
}

/// Fidelity of a non-interacting condensate prepared on site 0 with the
/// condensate in orbital `target`: `|⟨χ_target|χ(T)⟩|^{2N}`.
pub fn free_boson_fidelity(
    schedule: &PulseSchedule,
    geometry: &Geometry,
    particles: usize,
    target: &DVector<Complex64>,
) -> Result<f64> {
    check_bare_schedule(schedule)?;
    if target.len() != geometry.num_sites() {
        return Err(Error::Input(format!("target has {} entries for {} sites", target.len(), geometry.num_sites())));
    }
    let u = SingleParticlePropagator::from_schedule(schedule, geometry)?;
    let chi = u.matrix.column(0);
    let overlap: Complex64 = target.iter().zip(chi.iter()).map(|(a, b)| a.conj() * b).sum();
    Ok(overlap.norm_sqr().powi(particles as i32))
}

/// Lowest eigenvector of `sign·G_hop`, the single-particle target orbital.
pub fn single_particle_ground(geometry: &Geometry, sign: f64) -> DVector<Complex64> {
    let (_, v) = eigh_real(&(hop_matrix(geometry) * sign));
    v.column(0).map(|x| Complex64::new(x, 0.0))
}

fn gram_defect(a: &DMatrix<Complex64>) -> f64 {
    let n = a.ncols();
    max_abs_diff(&(a.adjoint() * a), &DMatrix::identity(n, n))
}

/// `|det⟨a_m|b_n⟩|²` for two sets of orthonormal orbitals stored as columns.
pub fn jordan_wigner_fidelity(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::Input(format!("orbital sets have shapes {:?} and {:?}", a.shape(), b.shape())));
    }
    for (name, m) in [("first", a), ("second", b)] {
        let d = gram_defect(m);
        if d > GRAM_TOLERANCE {
            return Err(Error::Input(format!("{name} orbital set is not orthonormal (Gram deviation {d:.3e})")));
        }
    }
    Ok((a.adjoint() * b).determinant().norm_sqr())
}

/// Real-orbital version of [`jordan_wigner_fidelity`], for large chains.
pub fn jordan_wigner_fidelity_real(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::Input(format!("orbital sets have shapes {:?} and {:?}", a.shape(), b.shape())));
    }
    for (name, m) in [("first", a), ("second", b)] {
        let n = m.ncols();
        let d = (m.transpose() * m - DMatrix::<f64>::identity(n, n)).abs().max();
        if d > GRAM_TOLERANCE {
            return Err(Error::Input(format!("{name} orbital set is not orthonormal (Gram deviation {d:.3e})")));
        }
    }
    let det = (a.transpose() * b).lu().determinant();
    Ok(det * det)
}

/// Columns `e_s` for each occupied site.
pub fn site_orbitals(sites: usize, occupied: &[usize]) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(sites, occupied.len());
    for (c, &s) in occupied.iter().enumerate() {
        m[(s, c)] = Complex64::new(1.0, 0.0);
    }
    m
}

/// The `count` lowest eigenvectors of a real symmetric matrix, as columns.
pub fn lowest_orbitals(h: &DMatrix<f64>, count: usize) -> DMatrix<Complex64> {
    let (_, v) = eigh_real(h);
    to_complex(&v.columns(0, count).into_owned())
}

/// Hard-core chain fidelity of a schedule whose segments are bare hop or
/// tilt pulses, starting from occupied `sites` and targeting the Fermi sea
/// of `sign·X`.
pub fn hardcore_schedule_fidelity(schedule: &PulseSchedule, geometry: &Geometry, sites: &[usize], sign: f64) -> Result<f64> {
    if !geometry.is_chain() {
        return Err(Error::Unsupported("Jordan-Wigner mapping needs a chain".into()));
    }
    for seg in &schedule.segments {
        if !seg.extra.is_empty() {
            return Err(Error::Misuse(format!("segment '{}' carries extra terms", seg.label)));
        }
    }
    let u = SingleParticlePropagator::from_schedule(schedule, geometry)?;
    let evolved = u.apply(&site_orbitals(geometry.num_sites(), sites));
    let target = lowest_orbitals(&(hop_matrix(geometry) * sign), sites.len());
    jordan_wigner_fidelity(&target, &evolved)
}

/// Hard-core preparation fidelity for ideal pulses of areas `θ` and `φ`,
/// starting from the `N` leftmost sites of an engineered chain.
pub fn hardcore_prep_fidelity_oracle(len: usize, particles: usize, theta: f64, phi: f64) -> Result<f64> {
    if particles > len {
        return Err(Error::Filling { particles, sites: len });
    }
    let x = chain_hop_matrix(len);
    let z = DMatrix::from_diagonal(&DVector::from_vec(chain_tilt(len)));
    let u = unitary_real(&z, phi) * unitary_real(&x, theta);
    let occupied: Vec<usize> = (0..particles).collect();
    let evolved = &u * site_orbitals(len, &occupied);
    jordan_wigner_fidelity(&lowest_orbitals(&x, particles), &evolved)
}

#[derive(Debug, Clone, Serialize)]
pub struct AlgebraCheck {
    pub identity: String,
    /// `L` for chain identities, `ℓ` for triangular ones.
    pub size: usize,
    pub deviation: f64,
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct AlgebraReport {
    pub checks: Vec<AlgebraCheck>,
}

impl AlgebraReport {
    fn record(&mut self, identity: &str, size: usize, deviation: f64) {
        self.checks.push(AlgebraCheck { identity: identity.into(), size, deviation });
    }

    pub fn max_deviation(&self) -> f64 {
        self.checks.iter().map(|c| c.deviation).fold(0.0, f64::max)
    }

    /// Identity name → largest deviation over sizes.
    pub fn by_identity(&self) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        for c in &self.checks {
            let e = out.entry(c.identity.clone()).or_insert(0.0f64);
            *e = e.max(c.deviation);
        }
        out
    }

    pub fn failures(&self, tolerance: f64) -> Vec<&AlgebraCheck> {
        self.checks.iter().filter(|c| !(c.deviation < tolerance)).collect()
    }

    pub fn to_json(&self, tolerance: f64) -> Result<String> {
        let v = serde_json::json!({
            "identities": self.by_identity(),
            "max_deviation": self.max_deviation(),
            "tolerance": tolerance,
            "passed": self.failures(tolerance).is_empty(),
            "checks": self.checks,
        });
        Ok(serde_json::to_string_pretty(&v)?)
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Site-space matrix of the Schwinger bilinear `m_μ† m_ν` for one particle
/// on a lattice whose sites are labelled by mode occupations.
fn bilinear(labels: &[Vec<usize>], index: &dyn Fn(&[usize]) -> usize, mu: usize, nu: usize) -> DMatrix<Complex64> {
    let n = labels.len();
    let mut m = DMatrix::zeros(n, n);
    for (k, lab) in labels.iter().enumerate() {
        if lab[nu] == 0 {
            continue;
        }
        let mut out = lab.clone();
        let mut amp = (out[nu] as f64).sqrt();
        out[nu] -= 1;
        amp *= (out[mu] as f64 + 1.0).sqrt();
        out[mu] += 1;
        m[(index(&out), k)] = c(amp);
    }
    m
}

/// Largest deviation of `e^{−iφG} E_{μν} e^{iφG}` from `Σ conj(R_{μα}) R_{νβ} E_{αβ}`
/// with `R = I + (e^{iφ}−1)/k·𝟙𝟙ᵀ`, where `G` is the uniform bilinear sum over
/// `k` modes divided by `k` minus its diagonal.
fn schwinger_conjugation(bilinears: &[Vec<DMatrix<Complex64>>], g: &DMatrix<f64>, phi: f64) -> f64 {
    let k = bilinears.len();
    let u = unitary_real(g, phi);
    let shift = (Complex64::from_polar(1.0, phi) - 1.0) / k as f64;
    let r = |a: usize, b: usize| if a == b { c(1.0) + shift } else { shift };
    let mut worst = 0.0f64;
    for mu in 0..k {
        for nu in 0..k {
            let lhs = &u * &bilinears[mu][nu] * u.adjoint();
            let mut rhs = DMatrix::zeros(lhs.nrows(), lhs.ncols());
            for a in 0..k {
                for b in 0..k {
                    rhs += &bilinears[a][b] * (r(mu, a).conj() * r(nu, b));
                }
            }
            worst = worst.max(max_abs_diff(&lhs, &rhs));
        }
    }
    worst
}

fn su2_checks(report: &mut AlgebraReport, len: usize) -> Result<()> {
    let i = Complex64::new(0.0, 1.0);
    let s = su2_generators(len)?;
    let dev = [
        max_abs_diff(&commutator(&s.x, &s.y), &(&s.z * i)),
        max_abs_diff(&commutator(&s.y, &s.z), &(&s.x * i)),
        max_abs_diff(&commutator(&s.z, &s.x), &(&s.y * i)),
    ];
    report.record("su2_commutators", len, dev.into_iter().fold(0.0, f64::max));

    let spin = (len as f64 - 1.0) / 2.0;
    let casimir = &s.x * &s.x + &s.y * &s.y + &s.z * &s.z;
    report.record("su2_casimir", len, max_abs_diff(&casimir, &DMatrix::from_diagonal_element(len, len, c(spin * (spin + 1.0)))));

    let x = chain_hop_matrix(len);
    let zr = DMatrix::from_diagonal(&DVector::from_vec(chain_tilt(len)));
    let mut worst = 0.0f64;
    for sign in [1.0, -1.0] {
        let a = sign * PI / 2.0;
        let u = unitary_real(&zr, a) * unitary_real(&x, a);
        worst = worst.max(max_abs_diff(&(&u * &s.z * u.adjoint()), &s.x));
    }
    report.record("su2_rotation_z_to_x", len, worst);

    // sites j ↔ (n_a, n_b) = (j, L−1−j)
    let labels: Vec<Vec<usize>> = (0..len).map(|j| vec![j, len - 1 - j]).collect();
    let index = |l: &[usize]| l[0];
    let e: Vec<Vec<_>> = (0..2).map(|m| (0..2).map(|n| bilinear(&labels, &index, m, n)).collect()).collect();
    let x_from_modes = (&e[0][1] + &e[1][0]) * c(0.5);
    let z_from_modes = (&e[0][0] - &e[1][1]) * c(0.5);
    report.record(
        "su2_schwinger_form",
        len,
        max_abs_diff(&x_from_modes, &s.x).max(max_abs_diff(&z_from_modes, &s.z)),
    );
    let worst = [PI / 2.0, 0.37, -1.1, PI]
        .into_iter()
        .map(|phi| schwinger_conjugation(&e, &x, phi))
        .fold(0.0, f64::max);
    report.record("su2_mode_conjugation", len, worst);
    Ok(())
}

fn su3_checks(report: &mut AlgebraReport, ell: usize) -> Result<()> {
    let (q, w) = su3_generators(ell)?;
    let (qc, wc) = (to_complex(&q), to_complex(&w));
    let mut worst = 0.0f64;
    for sign in [1.0, -1.0] {
        let a = sign * 2.0 * PI / 3.0;
        let u = unitary_real(&q, a) * unitary_real(&w, a);
        worst = worst.max(max_abs_diff(&(&u * &qc * u.adjoint()), &wc));
    }
    report.record("su3_rotation_q_to_w", ell, worst);

    let labels: Vec<Vec<usize>> = triangular_sites(ell).into_iter().map(|(a, b, c)| vec![a, b, c]).collect();
    let index = |l: &[usize]| triangular_index(ell, l[0], l[1]);
    let e: Vec<Vec<_>> = (0..3).map(|m| (0..3).map(|n| bilinear(&labels, &index, m, n)).collect()).collect();
    let mut w_from_modes = DMatrix::zeros(q.nrows(), q.ncols());
    for m in 0..3 {
        for n in 0..3 {
            if m != n {
                w_from_modes += &e[m][n] * c(1.0 / 3.0);
            }
        }
    }
    let q_from_modes = &e[0][0] - DMatrix::from_diagonal_element(q.nrows(), q.ncols(), c(ell as f64 / 3.0));
    report.record(
        "su3_schwinger_form",
        ell,
        max_abs_diff(&w_from_modes, &wc).max(max_abs_diff(&q_from_modes, &qc)),
    );
    let worst = [2.0 * PI / 3.0, 0.37, -1.1]
        .into_iter()
        .map(|phi| schwinger_conjugation(&e, &w, phi))
        .fold(0.0, f64::max);
    report.record("su3_mode_conjugation", ell, worst);

    // quadratic Casimir Σ E_{μν}E_{νμ} − (Σ E_{μμ})²/3 is constant on the lattice
    let n = q.nrows();
    let mut cas = DMatrix::zeros(n, n);
    let mut trace = DMatrix::zeros(n, n);
    for m in 0..3 {
        trace += &e[m][m];
        for k in 0..3 {
            cas += &e[m][k] * &e[k][m];
        }
    }
    cas -= &trace * &trace * c(1.0 / 3.0);
    let l = ell as f64;
    let expect = l * (l + 3.0) * 2.0 / 3.0;
    report.record("su3_casimir", ell, max_abs_diff(&cas, &DMatrix::from_diagonal_element(n, n, c(expect))));
    Ok(())
}

/// Runs every identity for chains `2..=max_len` and triangles `1..=max_ell`.
pub fn algebra_suite(max_len: usize, max_ell: usize) -> Result<AlgebraReport> {
    let mut report = AlgebraReport::default();
    for len in 2..=max_len {
        su2_checks(&mut report, len)?;
    }
    for ell in 1..=max_ell {
        su3_checks(&mut report, ell)?;
    }
    Ok(report)
}

/// Engineered-vs-uniform hard-core overlap `|⟨ψ_X|ψ_u⟩|²` for `N` particles
/// on `L` sites, from tridiagonal eigenvectors. Both chains hop with positive sign.
pub fn uniform_overlap(len: usize, particles: usize) -> Result<f64> {
    if len < 2 || particles == 0 || particles > len {
        return Err(Error::Parameter(format!("need 0 < N <= L and L >= 2, got L={len}, N={particles}")));
    }
    let orbitals = |off: Vec<f64>| {
        let (_, vecs) = crate::tridiag::lowest_eigenpairs(&vec![0.0; len], &off, particles);
        DMatrix::from_fn(len, particles, |r, c| vecs[c][r])
    };
    let engineered = orbitals((1..len).map(|j| ((j * (len - j)) as f64).sqrt() / 2.0).collect());
    let uniform = orbitals(vec![1.0; len - 1]);
    jordan_wigner_fidelity_real(&engineered, &uniform)
}
