//! Fixed-particle-number bosonic Fock spaces.
//!
//! States are ordered descending-lexicographically in their occupation
//! vectors, so `(N, 0, …, 0)` is index 0. Ranking uses a table of restricted
//! compositions, which makes `index_of` an `O(L)` exact inverse of `state`.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Geometry, GeometryKind, Site};

/// Default upper bound on basis dimension.
pub const DEFAULT_DIMENSION_CAP: usize = 5_000_000;

#[derive(Debug)]
pub struct FockBasis {
    geometry: Arc<Geometry>,
    particles: usize,
    n_max: usize,
    dim: usize,
    /// `counts[k * (N+1) + r]`: ways to put `r` particles on sites `k..L`.
    counts: Vec<u64>,
    states: Vec<u8>,
}

fn composition_counts(sites: usize, particles: usize, n_max: usize) -> Vec<u128> {
    let w = particles + 1;
    let mut c = vec![0u128; (sites + 1) * w];
    c[sites * w] = 1;
    for k in (0..sites).rev() {
        for r in 0..=particles {
            let mut acc = 0u128;
            for m in 0..=r.min(n_max) {
                acc = acc.saturating_add(c[(k + 1) * w + r - m]);
            }
            c[k * w + r] = acc;
        }
    }
    c
}

/// Closed-form dimension of the `N`-particle sector with occupancy cap.
pub fn sector_dimension(sites: usize, particles: usize, n_max: usize) -> u128 {
    composition_counts(sites, particles, n_max)[particles]
}

impl FockBasis {
    pub fn new(geometry: Arc<Geometry>, particles: usize, n_max: usize) -> Result<Self> {
        Self::with_cap(geometry, particles, n_max, DEFAULT_DIMENSION_CAP)
    }

    pub fn with_cap(
        geometry: Arc<Geometry>,
        particles: usize,
        n_max: usize,
        cap: usize,
    ) -> Result<Self> {
        if particles < 1 {
            return Err(Error::Parameter("particle number must be at least 1".into()));
        }
        if n_max < 1 {
            return Err(Error::Parameter("occupancy cap must be at least 1".into()));
        }
        if n_max > u8::MAX as usize {
            return Err(Error::Parameter(format!("occupancy cap {n_max} exceeds 255")));
        }
        let n_max = n_max.min(particles);
        let sites = geometry.num_sites();
        if n_max * sites < particles {
            return Err(Error::Filling { particles, sites });
        }
        let wide = composition_counts(sites, particles, n_max);
        let requested = wide[particles];
        if requested > cap as u128 {
            return Err(Error::Resource { requested, cap });
        }
        let dim = requested as usize;
        let counts = wide.into_iter().map(|c| c as u64).collect();

        let mut states = Vec::with_capacity(dim * sites);
        let mut occ = vec![0u8; sites];
        enumerate(&mut occ, 0, particles, n_max, &mut states);
        debug_assert_eq!(states.len(), dim * sites);
        Ok(Self { geometry, particles, n_max, dim, counts, states })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn geometry_arc(&self) -> &Arc<Geometry> {
        &self.geometry
    }

    pub fn num_sites(&self) -> usize {
        self.geometry.num_sites()
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// True when no occupancy truncation is in effect.
    pub fn is_full(&self) -> bool {
        self.n_max >= self.particles
    }

    pub fn is_hardcore(&self) -> bool {
        self.n_max == 1
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn state(&self, k: usize) -> &[u8] {
        let l = self.num_sites();
        &self.states[k * l..(k + 1) * l]
    }

    /// Position of `occ` in the basis, or `None` if it is not a member.
    pub fn index_of(&self, occ: &[u8]) -> Option<usize> {
        let l = self.num_sites();
        if occ.len() != l {
            return None;
        }
        let w = self.particles + 1;
        let mut remaining = self.particles;
        let mut rank = 0u64;
        for (k, &n) in occ.iter().enumerate() {
            let n = n as usize;
            if n > self.n_max || n > remaining {
                return None;
            }
            for m in (n + 1)..=remaining.min(self.n_max) {
                rank += self.counts[(k + 1) * w + remaining - m];
            }
            remaining -= n;
        }
        (remaining == 0).then_some(rank as usize)
    }

    pub fn occupation_string(&self, k: usize) -> String {
        self.state(k).iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",")
    }
}

fn enumerate(occ: &mut [u8], k: usize, remaining: usize, n_max: usize, out: &mut Vec<u8>) {
    let l = occ.len();
    if k == l - 1 {
        if remaining <= n_max {
            occ[k] = remaining as u8;
            out.extend_from_slice(occ);
        }
        return;
    }
    let capacity_after = (l - k - 1) * n_max;
    for n in (0..=remaining.min(n_max)).rev() {
        if remaining - n > capacity_after {
            break;
        }
        occ[k] = n as u8;
        enumerate(occ, k + 1, remaining - n, n_max, out);
    }
    occ[k] = 0;
}

/// Which sites the one-per-site product state fills.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HardcoreSites {
    /// The first `N` sites of the geometry's site order.
    #[default]
    Leading,
    /// The first `N` triangular sites in ascending lexicographic `(na, nb, nc)`
    /// order. Identical to `Leading` on chains.
    AscendingLex,
    Explicit(Vec<usize>),
}

impl HardcoreSites {
    pub fn resolve(&self, geometry: &Geometry, particles: usize) -> Result<Vec<usize>> {
        let sites = geometry.num_sites();
        if particles > sites {
            return Err(Error::Filling { particles, sites });
        }
        let chosen = match self {
            HardcoreSites::Leading => (0..particles).collect(),
            HardcoreSites::AscendingLex => {
                let mut order: Vec<usize> = (0..sites).collect();
                if matches!(geometry.kind, GeometryKind::Triangular { .. }) {
                    let key = |s: &Site| match *s {
                        Site::Tri { na, nb, nc } => (na, nb, nc),
                        Site::Chain { j } => (j, 0, 0),
                    };
                    order.sort_by_key(|&i| key(&geometry.sites[i]));
                }
                order.truncate(particles);
                order
            }
            HardcoreSites::Explicit(v) => {
                let mut s = v.clone();
                s.sort_unstable();
                s.dedup();
                if s.len() != particles || s.iter().any(|&i| i >= sites) {
                    return Err(Error::Input(format!(
                        "explicit hard-core sites {v:?} do not name {particles} distinct sites"
                    )));
                }
                v.clone()
            }
        };
        Ok(chosen)
    }
}

#[derive(Debug, Clone)]
pub struct StateVector {
    basis: Arc<FockBasis>,
    pub amps: Vec<Complex64>,
}

#[derive(Debug, Serialize)]
struct DumpEntry(String, f64, f64);

impl StateVector {
    pub fn zeros(basis: Arc<FockBasis>) -> Self {
        let amps = vec![Complex64::new(0.0, 0.0); basis.dim()];
        Self { basis, amps }
    }

    pub fn from_amplitudes(basis: Arc<FockBasis>, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != basis.dim() {
            return Err(Error::Input(format!(
                "amplitude vector has length {} but basis dimension is {}",
                amps.len(),
                basis.dim()
            )));
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::Input("non-finite amplitude".into()));
        }
        Ok(Self { basis, amps })
    }

    pub fn basis_state(basis: Arc<FockBasis>, occ: &[u8]) -> Result<Self> {
        let k = basis
            .index_of(occ)
            .ok_or_else(|| Error::Input(format!("occupation {occ:?} is not in the basis")))?;
        let mut s = Self::zeros(basis);
        s.amps[k] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    /// All particles on the first site.
    pub fn condensate(basis: Arc<FockBasis>) -> Result<Self> {
        if basis.n_max() < basis.particles() {
            return Err(Error::Cap { n_max: basis.n_max(), particles: basis.particles() });
        }
        let mut occ = vec![0u8; basis.num_sites()];
        occ[0] = basis.particles() as u8;
        Self::basis_state(basis, &occ)
    }

    pub fn hardcore(basis: Arc<FockBasis>, sites: &HardcoreSites) -> Result<Self> {
        let chosen = sites.resolve(basis.geometry(), basis.particles())?;
        let mut occ = vec![0u8; basis.num_sites()];
        for i in chosen {
            occ[i] = 1;
        }
        Self::basis_state(basis, &occ)
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            let inv = 1.0 / n;
            self.amps.iter_mut().for_each(|a| *a *= inv);
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// `⟨n_i⟩` for every site.
    pub fn density_profile(&self) -> Vec<f64> {
        let l = self.basis.num_sites();
        let mut rho = vec![0.0; l];
        for (k, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            if p == 0.0 {
                continue;
            }
            for (r, &n) in rho.iter_mut().zip(self.basis.state(k)) {
                *r += p * n as f64;
            }
        }
        rho
    }

    /// Expectation of a diagonal observable given by its basis-state values.
    pub fn diagonal_expectation(&self, values: &[f64]) -> f64 {
        self.amps.iter().zip(values).map(|(a, v)| a.norm_sqr() * v).sum()
    }

    /// JSON list of `[occupations, re, im]` for amplitudes above 1e-12.
    pub fn to_json(&self) -> Result<String> {
        let entries: Vec<DumpEntry> = self
            .amps
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm() > 1e-12)
            .map(|(k, a)| DumpEntry(self.basis.occupation_string(k), a.re, a.im))
            .collect();
        Ok(serde_json::to_string(&entries)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{chain_geometry, triangular_geometry};
    use proptest::prelude::*;

    fn chain(len: usize, n: usize, cap: usize) -> Arc<FockBasis> {
        Arc::new(FockBasis::new(Arc::new(chain_geometry(len).unwrap()), n, cap).unwrap())
    }

    fn binom(n: u64, k: u64) -> u64 {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn dimensions() {
        assert_eq!(chain(3, 2, 2).dim(), 6);
        assert_eq!(chain(8, 4, 4).dim(), 330);
        assert_eq!(chain(8, 4, 1).dim(), 70);
        assert_eq!(sector_dimension(16, 8, 3), 428_418);
    }

    #[test]
    fn first_state_is_left_condensate() {
        let b = chain(4, 3, 3);
        assert_eq!(b.state(0), &[3, 0, 0, 0]);
        assert_eq!(b.state(b.dim() - 1), &[0, 0, 0, 3]);
    }

    #[test]
    fn resource_cap_names_dimension() {
        let g = Arc::new(chain_geometry(16).unwrap());
        match FockBasis::with_cap(g, 8, 8, 1000) {
            Err(Error::Resource { requested, cap }) => {
                assert_eq!(requested, 490_314);
                assert_eq!(cap, 1000);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn condensate_needs_full_cap() {
        let b = chain(8, 4, 1);
        assert!(matches!(StateVector::condensate(b), Err(Error::Cap { .. })));
        let s = StateVector::condensate(chain(2, 2, 2)).unwrap();
        assert_eq!(s.amps[0], Complex64::new(1.0, 0.0));
        assert_eq!(s.basis().state(0), &[2, 0]);
    }

    #[test]
    fn hardcore_state_profiles() {
        let s = StateVector::hardcore(chain(8, 4, 1), &HardcoreSites::Leading).unwrap();
        assert_eq!(s.density_profile(), vec![1., 1., 1., 1., 0., 0., 0., 0.]);
        let full = StateVector::hardcore(chain(5, 5, 1), &HardcoreSites::Leading).unwrap();
        assert_eq!(full.dim(), 1);
        assert_eq!(full.density_profile(), vec![1.0; 5]);
        let g = Arc::new(chain_geometry(3).unwrap());
        assert!(matches!(FockBasis::new(g, 4, 1), Err(Error::Filling { .. })));
        assert!(matches!(
            HardcoreSites::Leading.resolve(&chain_geometry(3).unwrap(), 4),
            Err(Error::Filling { .. })
        ));
    }

    #[test]
    fn condensate_profiles() {
        let s = StateVector::condensate(chain(21, 5, 5)).unwrap();
        let rho = s.density_profile();
        assert_eq!(rho[0], 5.0);
        assert!(rho[1..].iter().all(|&r| r == 0.0));

        let tri = Arc::new(triangular_geometry(2).unwrap());
        let b = Arc::new(FockBasis::new(tri, 3, 3).unwrap());
        let s = StateVector::condensate(b).unwrap();
        let rho = s.density_profile();
        assert_eq!(rho.iter().sum::<f64>(), 3.0);
        assert_eq!(rho.iter().filter(|&&r| r != 0.0).count(), 1);
        assert_eq!(s.basis().geometry().sites[0], Site::Tri { na: 2, nb: 0, nc: 0 });
    }

    #[test]
    fn ascending_lex_sites_on_triangle() {
        let g = triangular_geometry(2).unwrap();
        let asc = HardcoreSites::AscendingLex.resolve(&g, 3).unwrap();
        let labels: Vec<Site> = asc.iter().map(|&i| g.sites[i]).collect();
        assert_eq!(
            labels,
            vec![
                Site::Tri { na: 0, nb: 0, nc: 2 },
                Site::Tri { na: 0, nb: 1, nc: 1 },
                Site::Tri { na: 0, nb: 2, nc: 0 }
            ]
        );
    }

    #[test]
    fn json_dump() {
        let s = StateVector::hardcore(chain(4, 2, 1), &HardcoreSites::Leading).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s.to_json().unwrap()).unwrap();
        assert_eq!(v[0][0], "1,1,0,0");
        assert_eq!(v[0][1], 1.0);
    }

    proptest! {
        #[test]
        fn dimension_matches_binomials(len in 2usize..=10, n in 1usize..=5, hard in proptest::bool::ANY) {
            let cap = if hard { 1 } else { n };
            prop_assume!(!hard || n <= len);
            let b = chain(len, n, cap);
            let expected = if hard { binom(len as u64, n as u64) } else { binom((n + len - 1) as u64, n as u64) };
            prop_assert_eq!(b.dim() as u64, expected);
        }

        #[test]
        fn ranking_inverts_enumeration(len in 2usize..=7, n in 1usize..=5, cap in 1usize..=5) {
            prop_assume!(cap * len >= n);
            let b = chain(len, n, cap);
            for k in 0..b.dim() {
                prop_assert_eq!(b.index_of(b.state(k)), Some(k));
                prop_assert_eq!(b.state(k).iter().map(|&x| x as usize).sum::<usize>(), n);
            }
        }

        #[test]
        fn random_density_sums_to_n(seed in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 35)) {
            let b = chain(4, 4, 4);
            let amps = seed.iter().map(|&(r, i)| Complex64::new(r, i)).collect();
            let mut s = StateVector::from_amplitudes(b, amps).unwrap();
            prop_assume!(s.norm() > 1e-3);
            s.normalize();
            let total: f64 = s.density_profile().iter().sum();
            prop_assert!((total - 4.0).abs() < 1e-10);
        }
    }
}
