//! Site indexings and weighted bond structures.
//!
//! Two geometries are supported: the open chain whose bond profile follows the
//! SU(2) spin matrices, and the triangular Schwinger lattice whose sites are
//! the triples `(na, nb, nc)` with `na + nb + nc = ℓ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GeometryKind {
    /// Engineered chain of `len` sites with bond profile `√(j(L−j))`.
    #[serde(rename = "chain")]
    Chain1D { len: usize },
    /// Chain of `len` sites with every bond at unit weight.
    UniformChain { len: usize },
    /// Triangular Schwinger lattice with `(ℓ+1)(ℓ+2)/2` sites.
    Triangular { ell: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Site {
    /// 1-based chain position.
    Chain { j: usize },
    Tri { na: usize, nb: usize, nc: usize },
}

/// Undirected bond between sites `i` and `j` (positions in the site list).
///
/// `raw` is the amplitude of the canonical hop direction and `weight` is `raw`
/// divided by the largest raw amplitude of the geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bond {
    pub i: usize,
    pub j: usize,
    pub raw: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub kind: GeometryKind,
    pub sites: Vec<Site>,
    pub bonds: Vec<Bond>,
}

impl Geometry {
    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn is_chain(&self) -> bool {
        matches!(self.kind, GeometryKind::Chain1D { .. } | GeometryKind::UniformChain { .. })
    }

    pub fn max_raw(&self) -> f64 {
        self.bonds.iter().map(|b| b.raw).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Sites adjacent to `site`, with the bond weight.
    pub fn neighbours(&self, site: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.bonds.iter().filter_map(move |b| {
            if b.i == site {
                Some((b.j, b.weight))
            } else if b.j == site {
                Some((b.i, b.weight))
            } else {
                None
            }
        })
    }
}

/// Largest `√(j(L−j))` over `j = 1..L−1`.
pub fn chain_max_raw(len: usize) -> f64 {
    let l = len as f64;
    if len % 2 == 0 {
        l / 2.0
    } else {
        (l * l - 1.0).sqrt() / 2.0
    }
}

/// Largest triangular hop amplitude `√(na(nb+1))/3`.
pub fn triangular_max_raw(ell: usize) -> f64 {
    let l = ell as f64;
    if ell % 2 == 1 {
        (l + 1.0) / 6.0
    } else {
        (l * (l + 2.0)).sqrt() / 6.0
    }
}

pub fn chain_geometry(len: usize) -> Result<Geometry> {
    if len < 2 {
        return Err(Error::InvalidGeometry(format!("chain needs L >= 2, got {len}")));
    }
    let max = chain_max_raw(len);
    let bonds = (1..len)
        .map(|j| {
            let raw = ((j * (len - j)) as f64).sqrt();
            Bond { i: j - 1, j, raw, weight: raw / max }
        })
        .collect();
    Ok(Geometry {
        kind: GeometryKind::Chain1D { len },
        sites: (1..=len).map(|j| Site::Chain { j }).collect(),
        bonds,
    })
}

pub fn uniform_chain_geometry(len: usize) -> Result<Geometry> {
    if len < 2 {
        return Err(Error::InvalidGeometry(format!("chain needs L >= 2, got {len}")));
    }
    Ok(Geometry {
        kind: GeometryKind::UniformChain { len },
        sites: (1..=len).map(|j| Site::Chain { j }).collect(),
        bonds: (1..len).map(|j| Bond { i: j - 1, j, raw: 1.0, weight: 1.0 }).collect(),
    })
}

/// Triangular sites in descending lexicographic order of `(na, nb, nc)`, so
/// the first site is the corner `(ℓ, 0, 0)`.
pub fn triangular_sites(ell: usize) -> Vec<(usize, usize, usize)> {
    let mut sites = Vec::with_capacity((ell + 1) * (ell + 2) / 2);
    for na in (0..=ell).rev() {
        for nb in (0..=ell - na).rev() {
            sites.push((na, nb, ell - na - nb));
        }
    }
    sites
}

/// Position of `(na, nb, nc)` in [`triangular_sites`] order.
pub fn triangular_index(ell: usize, na: usize, nb: usize) -> usize {
    // rows with larger na come first; row `na` holds ℓ−na+1 sites ordered by descending nb
    let rows_before: usize = ((na + 1)..=ell).map(|a| ell - a + 1).sum();
    rows_before + (ell - na - nb)
}

pub fn triangular_geometry(ell: usize) -> Result<Geometry> {
    if ell < 1 {
        return Err(Error::InvalidGeometry(format!("triangle needs ℓ >= 1, got {ell}")));
    }
    let sites = triangular_sites(ell);
    let max = triangular_max_raw(ell);
    let mut bonds = Vec::with_capacity(3 * ell * (ell + 1) / 2);
    for (pos, &(na, nb, nc)) in sites.iter().enumerate() {
        let labels = [na, nb, nc];
        // canonical directions a→b, b→c, c→a; their conjugates cover the other three
        for (from, to) in [(0, 1), (1, 2), (2, 0)] {
            if labels[from] == 0 {
                continue;
            }
            let mut dest = labels;
            dest[from] -= 1;
            dest[to] += 1;
            let raw = ((labels[from] * (labels[to] + 1)) as f64).sqrt() / 3.0;
            bonds.push(Bond {
                i: pos,
                j: triangular_index(ell, dest[0], dest[1]),
                raw,
                weight: raw / max,
            });
        }
    }
    Ok(Geometry {
        kind: GeometryKind::Triangular { ell },
        sites: sites.into_iter().map(|(na, nb, nc)| Site::Tri { na, nb, nc }).collect(),
        bonds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_rejects_single_site() {
        assert!(matches!(chain_geometry(1), Err(Error::InvalidGeometry(_))));
        assert!(matches!(triangular_geometry(0), Err(Error::InvalidGeometry(_))));
    }

    #[test]
    fn two_site_chain() {
        let g = chain_geometry(2).unwrap();
        assert_eq!(g.bonds.len(), 1);
        assert_eq!(g.bonds[0].raw, 1.0);
        assert_eq!(g.bonds[0].weight, 1.0);
    }

    #[test]
    fn eight_site_chain_weights() {
        let g = chain_geometry(8).unwrap();
        assert_eq!(g.bonds.len(), 7);
        let central = g.bonds[3];
        assert_eq!((central.i, central.j), (3, 4));
        assert!((central.raw - 4.0).abs() < 1e-15);
        assert!((central.weight - 1.0).abs() < 1e-15);
        assert!((g.bonds[0].weight - 7f64.sqrt() / 4.0).abs() < 1e-15);
    }

    #[test]
    fn odd_chain_normalizer() {
        let g = chain_geometry(21).unwrap();
        assert_eq!(g.bonds.len(), 20);
        let max = g.bonds.iter().map(|b| b.weight).fold(0.0, f64::max);
        assert!((max - 1.0).abs() < 1e-15);
        for k in 0..20 {
            assert!((g.bonds[k].weight - g.bonds[19 - k].weight).abs() < 1e-14);
        }
    }

    #[test]
    fn triangle_ell1() {
        let g = triangular_geometry(1).unwrap();
        assert_eq!(g.num_sites(), 3);
        assert_eq!(g.bonds.len(), 3);
        for b in &g.bonds {
            assert!((b.raw - 1.0 / 3.0).abs() < 1e-15);
            assert!((b.weight - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn triangle_ell3_amplitudes() {
        let g = triangular_geometry(3).unwrap();
        assert_eq!(g.num_sites(), 10);
        assert_eq!(g.bonds.len(), 18);
        let corner = triangular_index(3, 3, 0);
        let next = triangular_index(3, 2, 1);
        let b = g.bonds.iter().find(|b| b.i == corner && b.j == next).unwrap();
        assert!((b.raw - 3f64.sqrt() / 3.0).abs() < 1e-15);
        assert!((g.max_raw() - 2.0 / 3.0).abs() < 1e-15);
        let a = triangular_index(3, 2, 1);
        let c = triangular_index(3, 1, 2);
        let b = g.bonds.iter().find(|b| b.i == a && b.j == c).unwrap();
        assert!((b.raw - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn triangle_ell2_max_by_enumeration() {
        let g = triangular_geometry(2).unwrap();
        assert_eq!(g.num_sites(), 6);
        let mut brute: f64 = 0.0;
        for na in 0..=2usize {
            for nb in 0..=(2 - na) {
                if na > 0 {
                    brute = brute.max(((na * (nb + 1)) as f64).sqrt() / 3.0);
                }
            }
        }
        assert!((g.max_raw() - brute).abs() < 1e-15);
        assert!((brute - 2f64.sqrt() / 3.0).abs() < 1e-15);
    }

    #[test]
    fn triangular_index_matches_site_list() {
        for ell in 1..=6 {
            for (k, &(na, nb, _)) in triangular_sites(ell).iter().enumerate() {
                assert_eq!(triangular_index(ell, na, nb), k);
            }
        }
    }

    #[test]
    fn triangle_counts() {
        for ell in 1..=10 {
            let g = triangular_geometry(ell).unwrap();
            assert_eq!(g.num_sites(), (ell + 1) * (ell + 2) / 2);
            assert_eq!(g.bonds.len(), 3 * ell * (ell + 1) / 2);
            let max = g.bonds.iter().map(|b| b.weight).fold(0.0, f64::max);
            assert!((max - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn triangle_bonds_invariant_under_label_permutations() {
        let ell = 4;
        let g = triangular_geometry(ell).unwrap();
        let label = |s: Site| match s {
            Site::Tri { na, nb, nc } => [na, nb, nc],
            _ => unreachable!(),
        };
        let key = |g: &Geometry, perm: [usize; 3]| {
            let mut v: Vec<(Vec<usize>, Vec<usize>, i64)> = g
                .bonds
                .iter()
                .map(|b| {
                    let a = label(g.sites[b.i]);
                    let c = label(g.sites[b.j]);
                    let pa = vec![a[perm[0]], a[perm[1]], a[perm[2]]];
                    let pc = vec![c[perm[0]], c[perm[1]], c[perm[2]]];
                    let (x, y) = if pa < pc { (pa, pc) } else { (pc, pa) };
                    (x, y, (b.raw * 1e12).round() as i64)
                })
                .collect();
            v.sort();
            v
        };
        let base = key(&g, [0, 1, 2]);
        for perm in [[0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
            assert_eq!(key(&g, perm), base);
        }
    }

    #[test]
    fn geometry_serializes() {
        let json = chain_geometry(3).unwrap().to_json().unwrap();
        let back: Geometry = serde_json::from_str(&json).unwrap();
        assert_eq!(back.bonds.len(), 2);
        assert!(json.contains(r#""type":"chain""#) || json.contains(r#""type": "chain""#));
    }
}
