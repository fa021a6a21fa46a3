//! Hamiltonians and generators.
//!
//! Single-particle generators are returned as dense matrices over sites;
//! many-body lifts are [`SparseOperator`]s over a [`FockBasis`].
//!
//! The chain tilt is centred, `Z = diag(j − (L+1)/2)`, which makes `(X, Y, Z)`
//! a genuine spin-`(L−1)/2` representation. Within a fixed particle number the
//! centring only shifts `𝒵` by a constant.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::FockBasis;
use crate::lattice::{
    chain_max_raw, triangular_geometry, triangular_max_raw, Geometry, GeometryKind, Site,
};
use crate::sparse::{one_body, symmetric_hopping, SparseOperator};

/// Hop amplitude of `X` on bond `(j, j+1)`, 1-based `j`.
pub fn chain_hop_amplitude(len: usize, j: usize) -> f64 {
    ((j * (len - j)) as f64).sqrt() / 2.0
}

/// On-site values of the chain tilt `Z`.
pub fn chain_tilt(len: usize) -> Vec<f64> {
    let c = (len as f64 + 1.0) / 2.0;
    (1..=len).map(|j| j as f64 - c).collect()
}

/// Real symmetric single-particle `X`.
pub fn chain_hop_matrix(len: usize) -> DMatrix<f64> {
    let mut x = DMatrix::zeros(len, len);
    for j in 1..len {
        let a = chain_hop_amplitude(len, j);
        x[(j - 1, j)] = a;
        x[(j, j - 1)] = a;
    }
    x
}

pub struct Su2Generators {
    pub x: DMatrix<Complex64>,
    pub y: DMatrix<Complex64>,
    pub z: DMatrix<Complex64>,
}

pub fn su2_generators(len: usize) -> Result<Su2Generators> {
    if len < 2 {
        return Err(Error::InvalidGeometry(format!("chain needs L >= 2, got {len}")));
    }
    let x = chain_hop_matrix(len).map(|v| Complex64::new(v, 0.0));
    let mut y = DMatrix::zeros(len, len);
    for j in 1..len {
        let a = chain_hop_amplitude(len, j);
        // (S₊ − S₋)/(2i) with S₊ raising j
        y[(j, j - 1)] = Complex64::new(0.0, -a);
        y[(j - 1, j)] = Complex64::new(0.0, a);
    }
    let z = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        len,
        chain_tilt(len).into_iter().map(|v| Complex64::new(v, 0.0)),
    ));
    Ok(Su2Generators { x, y, z })
}

fn triangle_labels(geometry: &Geometry) -> Vec<(usize, usize, usize)> {
    geometry
        .sites
        .iter()
        .map(|s| match *s {
            Site::Tri { na, nb, nc } => (na, nb, nc),
            Site::Chain { j } => (j, 0, 0),
        })
        .collect()
}

/// On-site values of the triangular tilt `Q = n_a − ℓ/3`.
pub fn triangle_tilt(ell: usize) -> Vec<f64> {
    let g = triangular_geometry(ell).expect("ℓ >= 1");
    triangle_labels(&g).iter().map(|&(na, _, _)| na as f64 - ell as f64 / 3.0).collect()
}

/// Single-particle `(Q, W)` on the triangular lattice.
pub fn su3_generators(ell: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let g = triangular_geometry(ell)?;
    let n = g.num_sites();
    let q = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(triangle_tilt(ell)));
    let mut w = DMatrix::zeros(n, n);
    for b in &g.bonds {
        w[(b.i, b.j)] = b.raw;
        w[(b.j, b.i)] = b.raw;
    }
    Ok((q, w))
}

fn require_chain(basis: &FockBasis) -> Result<usize> {
    match basis.geometry().kind {
        GeometryKind::Chain1D { len } => Ok(len),
        other => Err(Error::Unsupported(format!("operator needs an engineered chain, got {other:?}"))),
    }
}

fn require_triangle(basis: &FockBasis) -> Result<usize> {
    match basis.geometry().kind {
        GeometryKind::Triangular { ell } => Ok(ell),
        other => Err(Error::Unsupported(format!("operator needs a triangular lattice, got {other:?}"))),
    }
}

/// Generic Bose-Hubbard Hamiltonian with one coupling per bond of the
/// geometry and one detuning per site.
pub fn bose_hubbard(
    basis: &Arc<FockBasis>,
    couplings: &[f64],
    detunings: &[f64],
    eta: f64,
) -> Result<SparseOperator> {
    let geo = basis.geometry();
    if couplings.len() != geo.bonds.len() {
        return Err(Error::Configuration(format!(
            "{} couplings given for {} bonds",
            couplings.len(),
            geo.bonds.len()
        )));
    }
    if detunings.len() != geo.num_sites() {
        return Err(Error::Configuration(format!(
            "{} detunings given for {} sites",
            detunings.len(),
            geo.num_sites()
        )));
    }
    let pairs: Vec<_> = geo.bonds.iter().zip(couplings).map(|(b, &g)| (b.i, b.j, g)).collect();
    let hops: Vec<_> = pairs.iter().flat_map(|&(i, j, g)| [(i, j, g), (j, i, g)]).collect();
    let mut h = one_body(basis, &hops, Some(detunings), "H");
    let hint = interaction_diagonal(basis);
    let d = h.diag.get_or_insert_with(|| vec![0.0; basis.dim()]);
    for (a, v) in d.iter_mut().zip(hint) {
        *a += 0.5 * eta * v;
    }
    Ok(h)
}

/// `Σ_j n_j(n_j − 1)` per basis state.
pub fn interaction_diagonal(basis: &FockBasis) -> Vec<f64> {
    (0..basis.dim())
        .map(|k| basis.state(k).iter().map(|&n| (n as f64) * (n as f64 - 1.0)).sum())
        .collect()
}

pub fn interaction(basis: &Arc<FockBasis>) -> SparseOperator {
    SparseOperator::diagonal(basis.clone(), interaction_diagonal(basis), "H_int")
}

pub fn number_operator(basis: &Arc<FockBasis>, site: usize) -> SparseOperator {
    let d = (0..basis.dim()).map(|k| basis.state(k)[site] as f64).collect();
    SparseOperator::diagonal(basis.clone(), d, format!("n_{}", site + 1))
}

pub fn total_number(basis: &Arc<FockBasis>) -> SparseOperator {
    let d = (0..basis.dim())
        .map(|k| basis.state(k).iter().map(|&n| n as f64).sum())
        .collect();
    SparseOperator::diagonal(basis.clone(), d, "N")
}

/// Many-body `𝒳` (engineered hopping) on a chain basis.
pub fn chain_hop(basis: &Arc<FockBasis>) -> Result<SparseOperator> {
    let len = require_chain(basis)?;
    let pairs: Vec<_> = (1..len).map(|j| (j - 1, j, chain_hop_amplitude(len, j))).collect();
    Ok(symmetric_hopping(basis, &pairs, "X"))
}

/// Many-body `𝒵` (centred tilt) on a chain basis.
pub fn chain_tilt_operator(basis: &Arc<FockBasis>) -> Result<SparseOperator> {
    let len = require_chain(basis)?;
    let z = chain_tilt(len);
    Ok(one_body(basis, &[], Some(&z), "Z"))
}

pub struct Su2Lift {
    pub x: SparseOperator,
    pub y: SparseOperator,
    pub z: SparseOperator,
    /// False when the occupancy cap truncates the sector, in which case the
    /// commutation relations hold only approximately.
    pub algebra_exact: bool,
}

pub fn many_body_generators(basis: &Arc<FockBasis>) -> Result<Su2Lift> {
    let len = require_chain(basis)?;
    let x = chain_hop(basis)?;
    let hops: Vec<_> = (1..len)
        .flat_map(|j| {
            let a = chain_hop_amplitude(len, j);
            [(j, j - 1, a), (j - 1, j, -a)]
        })
        .collect();
    let mut y = one_body(basis, &hops, None, "Y");
    y.scale = Complex64::new(0.0, -1.0);
    let z = chain_tilt_operator(basis)?;
    Ok(Su2Lift { x, y, z, algebra_exact: basis.is_full() })
}

/// `ζ = (8/L²)·𝒵`.
pub fn zeta(basis: &Arc<FockBasis>) -> Result<SparseOperator> {
    let len = require_chain(basis)?;
    let mut z = chain_tilt_operator(basis)?;
    z.scale = Complex64::new(8.0 / (len * len) as f64, 0.0);
    Ok(z.with_label("zeta"))
}

pub struct Su3Lift {
    pub q: SparseOperator,
    pub w: SparseOperator,
}

pub fn many_body_generators_2d(basis: &Arc<FockBasis>) -> Result<Su3Lift> {
    let ell = require_triangle(basis)?;
    let pairs: Vec<_> = basis.geometry().bonds.iter().map(|b| (b.i, b.j, b.raw)).collect();
    let w = symmetric_hopping(basis, &pairs, "W");
    let q = one_body(basis, &[], Some(&triangle_tilt(ell)), "Q");
    Ok(Su3Lift { q, w })
}

/// Many-body hopping with the given coupling per bond of the basis geometry.
pub fn bond_hopping(basis: &Arc<FockBasis>, couplings: &[f64], label: &str) -> Result<SparseOperator> {
    let geo = basis.geometry();
    if couplings.len() != geo.bonds.len() {
        return Err(Error::Configuration(format!(
            "{} couplings given for {} bonds",
            couplings.len(),
            geo.bonds.len()
        )));
    }
    let pairs: Vec<_> = geo.bonds.iter().zip(couplings).map(|(b, &g)| (b.i, b.j, g)).collect();
    Ok(symmetric_hopping(basis, &pairs, label))
}

/// Tilt values on each site of the geometry: `j − (L+1)/2` on chains and
/// `n_a − ℓ/3` on the triangle.
pub fn site_tilt(geometry: &Geometry) -> Vec<f64> {
    match geometry.kind {
        GeometryKind::Chain1D { len } | GeometryKind::UniformChain { len } => chain_tilt(len),
        GeometryKind::Triangular { ell } => triangle_tilt(ell),
    }
}

/// Largest single-particle hop amplitude of the engineered generator.
pub fn generator_max_hop(geometry: &Geometry) -> f64 {
    match geometry.kind {
        GeometryKind::Chain1D { len } => chain_max_raw(len) / 2.0,
        GeometryKind::UniformChain { .. } => 1.0,
        GeometryKind::Triangular { ell } => triangular_max_raw(ell),
    }
}

/// Largest absolute on-site tilt value.
pub fn generator_max_tilt(geometry: &Geometry) -> f64 {
    site_tilt(geometry).iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Single-particle amplitude of the engineered generator on each bond.
pub fn generator_bond_amplitudes(geometry: &Geometry) -> Vec<f64> {
    match geometry.kind {
        GeometryKind::Chain1D { .. } => geometry.bonds.iter().map(|b| b.raw / 2.0).collect(),
        _ => geometry.bonds.iter().map(|b| b.raw).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightConvention {
    /// Weights scaled so that the largest is exactly 1.
    #[default]
    Normalized,
    /// The triangular normalizer applied to `√(n_a(n_b+1))` without the
    /// generator's 1/3, giving a largest weight of `3^{1/N}`.
    AsPrinted,
}

/// Bare coupling weights `w_ij` whose `N`-th powers reproduce the engineered
/// hopping profile.
pub fn cat_weight_pattern(
    geometry: &Geometry,
    particles: usize,
    convention: WeightConvention,
) -> Result<Vec<f64>> {
    if particles < 1 {
        return Err(Error::Parameter("particle number must be at least 1".into()));
    }
    let inv = 1.0 / particles as f64;
    let factor = match (geometry.kind, convention) {
        (GeometryKind::Triangular { .. }, WeightConvention::AsPrinted) => 3.0,
        _ => 1.0,
    };
    Ok(geometry.bonds.iter().map(|b| (factor * b.weight).powf(inv)).collect())
}

pub struct CatEffective {
    /// Dense Hamiltonian over the manifold `{ N particles on site i }`.
    pub hamiltonian: DMatrix<f64>,
    pub hops: Vec<f64>,
    pub potentials: Vec<f64>,
    pub warning: Option<String>,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Effective hop `g_eff = −N|g|^N / ((N−1)!·|η|^{N−1})` for one bond.
pub fn cat_effective_hop(g: f64, eta: f64, particles: usize) -> f64 {
    let n = particles as f64;
    -n * g.abs().powi(particles as i32) / (factorial(particles - 1) * eta.abs().powi(particles as i32 - 1))
}

/// Coefficient of `g_ij²` in the second-order compensation detuning.
pub fn cat_compensation_coefficient(eta: f64, particles: usize) -> f64 {
    1.0 / ((particles as f64 - 1.0) * eta.abs())
}

/// Perturbative Hamiltonian of the attractive model restricted to the cat
/// manifold. `order = 1` drops the `g²` potential correction.
pub fn cat_effective_hamiltonian(
    geometry: &Geometry,
    couplings: &[f64],
    detunings: &[f64],
    eta: f64,
    particles: usize,
    order: u8,
) -> Result<CatEffective> {
    if particles < 2 {
        return Err(Error::DegenerateManifold(particles));
    }
    if eta >= 0.0 {
        return Err(Error::Parameter(format!("cat manifold needs attractive η < 0, got {eta}")));
    }
    if !(order == 1 || order == 2) {
        return Err(Error::Parameter(format!("order must be 1 or 2, got {order}")));
    }
    if couplings.len() != geometry.bonds.len() || detunings.len() != geometry.num_sites() {
        return Err(Error::Configuration("coupling or detuning list does not match geometry".into()));
    }
    let l = geometry.num_sites();
    let n = particles as f64;
    let gmax = couplings.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let warning = (gmax / eta.abs() > 0.2).then(|| {
        format!("max|g|/|η| = {:.3} > 0.2; effective model is not controlled", gmax / eta.abs())
    });
    let hops: Vec<f64> = couplings.iter().map(|&g| cat_effective_hop(g, eta, particles)).collect();
    let mut potentials: Vec<f64> = detunings.iter().map(|d| n * d).collect();
    if order == 2 {
        let c = n / ((n - 1.0) * eta.abs());
        for (b, g) in geometry.bonds.iter().zip(couplings) {
            potentials[b.i] -= c * g * g;
            potentials[b.j] -= c * g * g;
        }
    }
    let mut h = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(potentials.clone()));
    for (b, t) in geometry.bonds.iter().zip(&hops) {
        h[(b.i, b.j)] += t;
        h[(b.j, b.i)] += t;
    }
    debug_assert_eq!(h.nrows(), l);
    Ok(CatEffective { hamiltonian: h, hops, potentials, warning })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{commutator, eigh_real, max_abs_diff, to_complex, unitary_hermitian, unitary_real};
    use crate::fock::StateVector;
    use crate::lattice::{chain_geometry, triangular_index};
    use std::f64::consts::PI;

    fn chain_basis(len: usize, n: usize, cap: usize) -> Arc<FockBasis> {
        Arc::new(FockBasis::new(Arc::new(chain_geometry(len).unwrap()), n, cap).unwrap())
    }

    fn tri_basis(ell: usize, n: usize, cap: usize) -> Arc<FockBasis> {
        Arc::new(FockBasis::new(Arc::new(triangular_geometry(ell).unwrap()), n, cap).unwrap())
    }

    #[test]
    fn single_particle_hubbard() {
        let b = chain_basis(2, 1, 1);
        let h = bose_hubbard(&b, &[-0.7], &[0.0, 0.0], 123.0).unwrap();
        let d = h.to_dense_real().unwrap();
        assert_eq!(d, DMatrix::from_row_slice(2, 2, &[0.0, -0.7, -0.7, 0.0]));
        let (e, _) = eigh_real(&d);
        assert!((e[0] + 0.7).abs() < 1e-15 && (e[1] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn two_particle_hubbard() {
        let b = chain_basis(2, 2, 2);
        let (g, eta) = (0.3, 1.7);
        let h = bose_hubbard(&b, &[g], &[0.0, 0.0], eta).unwrap().to_dense_real().unwrap();
        let s = g * 2f64.sqrt();
        let expected = DMatrix::from_row_slice(3, 3, &[eta, s, 0., s, 0., s, 0., s, eta]);
        assert!((h - expected).abs().max() < 1e-15);
    }

    #[test]
    fn missing_coupling_is_configuration_error() {
        let b = chain_basis(3, 1, 1);
        assert!(matches!(bose_hubbard(&b, &[1.0], &[0.0; 3], 0.0), Err(Error::Configuration(_))));
    }

    #[test]
    fn hardcore_uniform_spectrum_is_free_fermion() {
        let b = chain_basis(8, 4, 1);
        let g = 0.6;
        let h = bose_hubbard(&b, &[g; 7], &[0.0; 8], 1e9).unwrap().to_dense_real().unwrap();
        let (e, _) = eigh_real(&h);
        let mut single: Vec<f64> = (1..=8).map(|k| 2.0 * g * (k as f64 * PI / 9.0).cos()).collect();
        single.sort_by(f64::total_cmp);
        let ground: f64 = single[..4].iter().sum();
        assert!((e[0] - ground).abs() < 1e-12);
    }

    #[test]
    fn su2_small_cases() {
        let s = su2_generators(2).unwrap();
        assert!((s.x[(0, 1)].re - 0.5).abs() < 1e-15);
        let s3 = su2_generators(3).unwrap();
        let zd: Vec<f64> = (0..3).map(|k| s3.z[(k, k)].re).collect();
        assert_eq!(zd, vec![-1.0, 0.0, 1.0]);
        let casimir = &s3.x * &s3.x + &s3.y * &s3.y + &s3.z * &s3.z;
        let expect = to_complex(&DMatrix::identity(3, 3)) * Complex64::new(2.0, 0.0);
        assert!(max_abs_diff(&casimir, &expect) < 1e-14);
    }

    #[test]
    fn su2_commutators_and_spectrum() {
        let i = Complex64::new(0.0, 1.0);
        for len in 2..=12 {
            let s = su2_generators(len).unwrap();
            assert!(max_abs_diff(&commutator(&s.x, &s.y), &(&s.z * i)) < 1e-12);
            assert!(max_abs_diff(&commutator(&s.y, &s.z), &(&s.x * i)) < 1e-12);
            assert!(max_abs_diff(&commutator(&s.z, &s.x), &(&s.y * i)) < 1e-12);
            let (e, _) = eigh_real(&chain_hop_matrix(len));
            let spin = (len as f64 - 1.0) / 2.0;
            for (k, v) in e.iter().enumerate() {
                assert!((v - (-spin + k as f64)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn many_body_reduces_to_single_particle() {
        for len in [2, 5, 8] {
            let b = chain_basis(len, 1, 1);
            let lift = many_body_generators(&b).unwrap();
            let s = su2_generators(len).unwrap();
            assert!(max_abs_diff(&lift.x.to_dense(), &s.x) < 1e-15);
            assert!(max_abs_diff(&lift.y.to_dense(), &s.y) < 1e-15);
            assert!(max_abs_diff(&lift.z.to_dense(), &s.z) < 1e-15);
        }
    }

    #[test]
    fn tilt_expectation_on_basis_state() {
        let b = chain_basis(4, 2, 2);
        let lift = many_body_generators(&b).unwrap();
        let psi = StateVector::basis_state(b, &[1, 0, 0, 1]).unwrap();
        assert!(lift.z.expectation(&psi.amps).norm() < 1e-15);
        let b = chain_basis(4, 2, 2);
        let psi = StateVector::basis_state(b.clone(), &[0, 0, 1, 1]).unwrap();
        let z = chain_tilt_operator(&b).unwrap();
        assert!((z.expectation(&psi.amps).re - 2.0).abs() < 1e-15);
    }

    #[test]
    fn many_body_rotation_identity() {
        let b = chain_basis(4, 2, 2);
        let lift = many_body_generators(&b).unwrap();
        assert!(lift.algebra_exact);
        let (x, z) = (lift.x.to_dense(), lift.z.to_dense());
        let u = unitary_hermitian(&z, PI / 2.0) * unitary_hermitian(&x, PI / 2.0);
        let rotated = &u * &z * u.adjoint();
        assert!(max_abs_diff(&rotated, &x) < 1e-10);
        let i = Complex64::new(0.0, 1.0);
        let (xd, yd, zd) = (lift.x.to_dense(), lift.y.to_dense(), lift.z.to_dense());
        assert!(max_abs_diff(&commutator(&xd, &yd), &(&zd * i)) < 1e-12);
        let truncated = chain_basis(4, 3, 2);
        assert!(!many_body_generators(&truncated).unwrap().algebra_exact);
    }

    #[test]
    fn su3_spectra() {
        let (q, w) = su3_generators(1).unwrap();
        let qd: Vec<f64> = (0..3).map(|k| q[(k, k)]).collect();
        assert!((qd[0] - 2.0 / 3.0).abs() < 1e-15 && (qd[1] + 1.0 / 3.0).abs() < 1e-15);
        let (ew, _) = eigh_real(&w);
        for (a, b) in ew.iter().zip([-1.0 / 3.0, -1.0 / 3.0, 2.0 / 3.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        let (_, w2) = su3_generators(2).unwrap();
        let (e2, _) = eigh_real(&w2);
        let expect = [-2.0 / 3.0, -2.0 / 3.0, -2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 4.0 / 3.0];
        for (a, b) in e2.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        for ell in 1..=6 {
            let (q, w) = su3_generators(ell).unwrap();
            let (eq, _) = eigh_real(&q);
            let (ew, _) = eigh_real(&w);
            assert!((eq - ew).abs().max() < 1e-10);
        }
    }

    #[test]
    fn su3_rotation_identity() {
        for ell in 1..=5 {
            let (q, w) = su3_generators(ell).unwrap();
            let a = 2.0 * PI / 3.0;
            let u = unitary_real(&q, a) * unitary_real(&w, a);
            let rotated = &u * to_complex(&q) * u.adjoint();
            assert!(max_abs_diff(&rotated, &to_complex(&w)) < 1e-10, "ℓ={ell}");
        }
    }

    #[test]
    fn su3_lift_matches_single_particle_and_rotates() {
        let b = tri_basis(3, 1, 1);
        let lift = many_body_generators_2d(&b).unwrap();
        let (q, w) = su3_generators(3).unwrap();
        assert!(max_abs_diff(&lift.q.to_dense(), &to_complex(&q)) < 1e-15);
        assert!(max_abs_diff(&lift.w.to_dense(), &to_complex(&w)) < 1e-15);

        let b = tri_basis(1, 2, 2);
        assert_eq!(b.dim(), 6);
        let lift = many_body_generators_2d(&b).unwrap();
        let (qd, wd) = (lift.q.to_dense(), lift.w.to_dense());
        let a = 2.0 * PI / 3.0;
        let u = unitary_hermitian(&qd, a) * unitary_hermitian(&wd, a);
        assert!(max_abs_diff(&(&u * &qd * u.adjoint()), &wd) < 1e-10);
    }

    #[test]
    fn su3_corner_tilt() {
        let b = tri_basis(2, 3, 3);
        let lift = many_body_generators_2d(&b).unwrap();
        let psi = StateVector::condensate(b).unwrap();
        assert!((lift.q.expectation(&psi.amps).re - 4.0).abs() < 1e-14);
    }

    #[test]
    fn interaction_values() {
        let b = chain_basis(2, 2, 2);
        let psi = StateVector::basis_state(b.clone(), &[2, 0]).unwrap();
        assert_eq!(interaction(&b).expectation(&psi.amps).re, 2.0);
        let b = chain_basis(3, 4, 4);
        let k = b.index_of(&[3, 1, 0]).unwrap();
        assert_eq!(interaction_diagonal(&b)[k], 6.0);
        let b = chain_basis(8, 4, 1);
        assert!(interaction_diagonal(&b).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zeta_values() {
        let b = chain_basis(8, 4, 1);
        let zt = zeta(&b).unwrap();
        assert!((zt.scale.re - 1.0 / 8.0).abs() < 1e-16);
        let left = StateVector::basis_state(b.clone(), &[1, 1, 1, 1, 0, 0, 0, 0]).unwrap();
        let right = StateVector::basis_state(b.clone(), &[0, 0, 0, 0, 1, 1, 1, 1]).unwrap();
        assert!((zt.expectation(&left.amps).re + 1.0).abs() < 1e-15);
        assert!((zt.expectation(&right.amps).re - 1.0).abs() < 1e-15);
        let tri = tri_basis(2, 1, 1);
        assert!(matches!(zeta(&tri), Err(Error::Unsupported(_))));
    }

    #[test]
    fn builders_are_hermitian_and_conserve_number() {
        let b = chain_basis(5, 3, 3);
        let lift = many_body_generators(&b).unwrap();
        let nb = total_number(&b).to_dense();
        for op in [&lift.x, &lift.y, &lift.z, &interaction(&b)] {
            assert_eq!(op.hermiticity_defect(), 0.0, "{}", op.label);
            let d = op.to_dense();
            assert!(max_abs_diff(&commutator(&d, &nb), &(&d * Complex64::new(0.0, 0.0))) < 1e-12);
        }
        let h = bose_hubbard(&b, &[0.1, -0.2, 0.3, 0.4], &[1.0, 0.0, -1.0, 2.0, 0.5], -3.0).unwrap();
        assert_eq!(h.hermiticity_defect(), 0.0);
        let t = tri_basis(2, 2, 2);
        let l2 = many_body_generators_2d(&t).unwrap();
        assert_eq!(l2.w.hermiticity_defect(), 0.0);
    }

    #[test]
    fn cat_effective_two_sites() {
        let g = chain_geometry(2).unwrap();
        let (gc, eta) = (0.01, -1.0);
        let eff = cat_effective_hamiltonian(&g, &[gc], &[0.0, 0.0], eta, 2, 2).unwrap();
        assert!((eff.hops[0] + 2.0 * gc * gc).abs() < 1e-18);
        assert!((eff.potentials[0] + 2.0 * gc * gc).abs() < 1e-18);
        // exact low doublet of the 3×3 problem, shifted by η
        let b = chain_basis(2, 2, 2);
        let h = bose_hubbard(&b, &[gc], &[0.0, 0.0], eta).unwrap().to_dense_real().unwrap();
        let (exact, _) = eigh_real(&h);
        let (approx, _) = eigh_real(&eff.hamiltonian);
        // agreement up to fourth order in g/|η|
        for k in 0..2 {
            assert!((exact[k] - eta - approx[k]).abs() < 20.0 * gc.powi(4));
        }
    }

    #[test]
    fn cat_effective_magnitude() {
        let tp = 2.0 * PI;
        let geff = cat_effective_hop(25.0 * tp, -300.0 * tp, 3).abs() / tp;
        assert!((geff - 3.0 * 25f64.powi(3) / (2.0 * 300f64.powi(2))).abs() < 1e-12);
        assert!((geff - 0.2604).abs() < 1e-4);
    }

    #[test]
    fn cat_effective_errors_and_trivial() {
        let g = chain_geometry(3).unwrap();
        assert!(matches!(
            cat_effective_hamiltonian(&g, &[0.1, 0.1], &[0.0; 3], -1.0, 1, 2),
            Err(Error::DegenerateManifold(1))
        ));
        let eff = cat_effective_hamiltonian(&g, &[0.0, 0.0], &[1.0, 2.0, 3.0], -1.0, 3, 2).unwrap();
        assert_eq!(eff.hamiltonian, DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 6.0, 9.0])));
        let warn = cat_effective_hamiltonian(&g, &[0.5, 0.1], &[0.0; 3], -1.0, 3, 1).unwrap();
        assert!(warn.warning.is_some());
    }

    #[test]
    fn cat_weights() {
        let g = chain_geometry(8).unwrap();
        let w1 = cat_weight_pattern(&g, 1, WeightConvention::Normalized).unwrap();
        for (w, b) in w1.iter().zip(&g.bonds) {
            assert!((w - b.weight).abs() < 1e-15);
        }
        let w3 = cat_weight_pattern(&g, 3, WeightConvention::Normalized).unwrap();
        assert!((w3[3] - 1.0).abs() < 1e-15);
        let w2 = cat_weight_pattern(&g, 2, WeightConvention::Normalized).unwrap();
        assert!((w2[0] - (7f64.sqrt() / 4.0).sqrt()).abs() < 1e-15);
        assert!((w2[0] - 0.8133).abs() < 1e-4);

        let t = triangular_geometry(2).unwrap();
        let printed = cat_weight_pattern(&t, 3, WeightConvention::AsPrinted).unwrap();
        let max = printed.iter().fold(0.0f64, |m, v| m.max(*v));
        assert!((max - 3f64.powf(1.0 / 3.0)).abs() < 1e-14);
    }

    #[test]
    fn cat_effective_reproduces_generators() {
        for (geo, single) in [
            (chain_geometry(8).unwrap(), chain_hop_matrix(8)),
            (triangular_geometry(3).unwrap(), su3_generators(3).unwrap().1),
        ] {
            let n = 3;
            let w = cat_weight_pattern(&geo, n, WeightConvention::Normalized).unwrap();
            let g: Vec<f64> = w.iter().map(|x| -0.02 * x).collect();
            let eff = cat_effective_hamiltonian(&geo, &g, &vec![0.0; geo.num_sites()], -1.0, n, 1).unwrap();
            let scale = eff.hamiltonian.abs().max() / single.abs().max();
            let diff = (&eff.hamiltonian + &single * scale).abs().max();
            assert!(diff / eff.hamiltonian.abs().max() < 1e-10);
        }
    }

    #[test]
    fn triangle_site_lookup() {
        let g = triangular_geometry(3).unwrap();
        let tilt = triangle_tilt(3);
        assert!((tilt[triangular_index(3, 3, 0)] - 2.0).abs() < 1e-15);
        assert_eq!(g.sites[0], Site::Tri { na: 3, nb: 0, nc: 0 });
    }
}
