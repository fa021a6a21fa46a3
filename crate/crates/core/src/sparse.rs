//! Sparse operators over a Fock basis.
//!
//! Every operator in this crate is `scale · (A + D)` with `A` a real CSR matrix
//! holding the off-diagonal part, `D` a real diagonal and `scale` a complex
//! scalar. Only the antisymmetric `𝒴` needs a non-real scale.

use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::FockBasis;

#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub n: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl Csr {
    pub fn empty(n: usize) -> Self {
        Self { n, indptr: vec![0; n + 1], indices: Vec::new(), values: Vec::new() }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Builds from unsorted triplets; duplicates are summed and exact zeros dropped.
    pub fn from_triplets(n: usize, mut trip: Vec<(u32, u32, f64)>) -> Self {
        trip.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; n + 1];
        let mut indices = Vec::with_capacity(trip.len());
        let mut values: Vec<f64> = Vec::with_capacity(trip.len());
        let mut last: Option<(u32, u32)> = None;
        for (r, c, v) in trip {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r as usize + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n {
            indptr[r + 1] += indptr[r];
        }
        let mut m = Self { n, indptr, indices, values };
        m.prune();
        m
    }

    fn prune(&mut self) {
        if self.values.iter().all(|&v| v != 0.0) {
            return;
        }
        let mut indptr = vec![0usize; self.n + 1];
        let mut indices = Vec::with_capacity(self.indices.len());
        let mut values = Vec::with_capacity(self.values.len());
        for r in 0..self.n {
            for k in self.indptr[r]..self.indptr[r + 1] {
                if self.values[k] != 0.0 {
                    indices.push(self.indices[k]);
                    values.push(self.values[k]);
                }
            }
            indptr[r + 1] = indices.len();
        }
        *self = Self { n: self.n, indptr, indices, values };
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.indptr[r]..self.indptr[r + 1]).map(move |k| (self.indices[k] as usize, self.values[k]))
    }

    /// `y += c · A x`.
    pub fn axpy_complex(&self, c: f64, x: &[Complex64], y: &mut [Complex64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += x[self.indices[k] as usize] * self.values[k];
            }
            *yr += acc * c;
        }
    }

    /// `y += c · A x` for real vectors.
    pub fn axpy_real(&self, c: f64, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += x[self.indices[k] as usize] * self.values[k];
            }
            *yr += acc * c;
        }
    }

    pub fn transpose(&self) -> Self {
        let trip = (0..self.n)
            .flat_map(|r| self.row(r).map(move |(c, v)| (c as u32, r as u32, v)))
            .collect();
        Self::from_triplets(self.n, trip)
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Csr, b: f64) -> Self {
        let mut trip = Vec::with_capacity(self.nnz() + other.nnz());
        for r in 0..self.n {
            trip.extend(self.row(r).map(|(c, v)| (r as u32, c as u32, a * v)));
            trip.extend(other.row(r).map(|(c, v)| (r as u32, c as u32, b * v)));
        }
        Self::from_triplets(self.n, trip)
    }
}

#[derive(Debug, Clone)]
pub struct SparseOperator {
    basis: Arc<FockBasis>,
    pub off: Option<Csr>,
    pub diag: Option<Vec<f64>>,
    pub scale: Complex64,
    pub hermitian: bool,
    pub label: String,
    /// Bond list `(i, j, g)` when the off-diagonal part is a symmetric hopping.
    pub pairs: Option<Vec<(usize, usize, f64)>>,
}

impl SparseOperator {
    pub fn new(
        basis: Arc<FockBasis>,
        off: Option<Csr>,
        diag: Option<Vec<f64>>,
        scale: Complex64,
        hermitian: bool,
        label: impl Into<String>,
    ) -> Self {
        Self { basis, off, diag, scale, hermitian, label: label.into(), pairs: None }
    }

    pub fn diagonal(basis: Arc<FockBasis>, diag: Vec<f64>, label: impl Into<String>) -> Self {
        Self::new(basis, None, Some(diag), Complex64::new(1.0, 0.0), true, label)
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// True when the operator has a real matrix representation.
    pub fn is_real(&self) -> bool {
        self.scale.im == 0.0
    }

    pub fn is_diagonal(&self) -> bool {
        self.off.as_ref().is_none_or(|a| a.nnz() == 0)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Diagonal entries including the scale, if real.
    pub fn real_diagonal(&self) -> Option<Vec<f64>> {
        if !self.is_real() {
            return None;
        }
        Some(match &self.diag {
            Some(d) => d.iter().map(|v| v * self.scale.re).collect(),
            None => vec![0.0; self.dim()],
        })
    }

    /// `y += c · self · x`.
    pub fn apply_add(&self, c: Complex64, x: &[Complex64], y: &mut [Complex64]) {
        let s = c * self.scale;
        if let Some(d) = &self.diag {
            for ((yi, xi), di) in y.iter_mut().zip(x).zip(d) {
                *yi += s * *xi * *di;
            }
        }
        if let Some(a) = &self.off {
            if s.im == 0.0 {
                a.axpy_complex(s.re, x, y);
            } else {
                for (r, yr) in y.iter_mut().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (col, v) in a.row(r) {
                        acc += x[col] * v;
                    }
                    *yr += acc * s;
                }
            }
        }
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); x.len()];
        self.apply_add(Complex64::new(1.0, 0.0), x, &mut y);
        y
    }

    /// `⟨x|self|x⟩`.
    pub fn expectation(&self, x: &[Complex64]) -> Complex64 {
        let y = self.apply(x);
        x.iter().zip(&y).map(|(a, b)| a.conj() * b).sum()
    }

    /// `Σ_k c_k · op_k` over operators sharing one basis. Complex scales are
    /// only merged when all terms share the same scale.
    pub fn linear_combination(terms: &[(f64, &SparseOperator)], label: &str) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::Configuration("empty linear combination".into()))?
            .1;
        let basis = first.basis.clone();
        let n = basis.dim();
        let real = terms.iter().all(|(_, op)| op.is_real());
        let common = terms.iter().all(|(_, op)| op.scale == first.scale);
        if !real && !common {
            return Err(Error::Unsupported("mixing operators with different complex scales".into()));
        }
        let mut diag: Option<Vec<f64>> = None;
        let mut trip = Vec::new();
        for &(c, op) in terms {
            if !Arc::ptr_eq(&op.basis, &basis) && op.basis.dim() != n {
                return Err(Error::Configuration("operators live on different bases".into()));
            }
            let w = if real { c * op.scale.re } else { c };
            if let Some(d) = &op.diag {
                let acc = diag.get_or_insert_with(|| vec![0.0; n]);
                for (a, v) in acc.iter_mut().zip(d) {
                    *a += w * v;
                }
            }
            if let Some(a) = &op.off {
                for r in 0..n {
                    trip.extend(a.row(r).map(|(col, v)| (r as u32, col as u32, w * v)));
                }
            }
        }
        let off = (!trip.is_empty()).then(|| Csr::from_triplets(n, trip));
        let scale = if real { Complex64::new(1.0, 0.0) } else { first.scale };
        let hermitian = terms.iter().all(|(_, op)| op.hermitian);
        Ok(Self::new(basis, off, diag, scale, hermitian, label))
    }

    /// Dense complex matrix; intended for small sectors.
    pub fn to_dense(&self) -> nalgebra::DMatrix<Complex64> {
        let n = self.dim();
        let mut m = nalgebra::DMatrix::<Complex64>::zeros(n, n);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }

    /// Dense real matrix, or `None` if the operator is not real.
    pub fn to_dense_real(&self) -> Option<nalgebra::DMatrix<f64>> {
        if !self.is_real() {
            return None;
        }
        let n = self.dim();
        let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v.re;
        }
        Some(m)
    }

    /// `(row, col, value)` entries including the scale.
    pub fn triplets(&self) -> Vec<(usize, usize, Complex64)> {
        let mut out = Vec::new();
        if let Some(d) = &self.diag {
            out.extend(
                d.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, v)| (i, i, self.scale * *v)),
            );
        }
        if let Some(a) = &self.off {
            for r in 0..a.n {
                out.extend(a.row(r).map(|(c, v)| (r, c, self.scale * v)));
            }
        }
        out.sort_by_key(|&(r, c, _)| (r, c));
        out
    }

    /// Largest `|H_rc − conj(H_cr)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let t = self.triplets();
        let lookup: std::collections::HashMap<(usize, usize), Complex64> =
            t.iter().map(|&(r, c, v)| ((r, c), v)).collect();
        for &(r, c, v) in &t {
            let w = lookup.get(&(c, r)).copied().unwrap_or_default();
            worst = worst.max((v - w.conj()).norm());
        }
        worst
    }

    /// Matrix Market coordinate text (complex general).
    pub fn to_matrix_market(&self) -> String {
        let t = self.triplets();
        let mut s = String::new();
        let _ = writeln!(s, "%%MatrixMarket matrix coordinate complex general");
        let _ = writeln!(s, "% {}", self.label);
        let _ = writeln!(s, "{} {} {}", self.dim(), self.dim(), t.len());
        for (r, c, v) in t {
            let _ = writeln!(s, "{} {} {:.17e} {:.17e}", r + 1, c + 1, v.re, v.im);
        }
        s
    }
}

/// Lifts a single-particle operator `Σ h_ij |i⟩⟨j|` (off-diagonal entries
/// listed once per ordered pair) plus on-site terms to `Σ h_ij d_i†d_j`.
pub fn one_body(
    basis: &Arc<FockBasis>,
    hops: &[(usize, usize, f64)],
    onsite: Option<&[f64]>,
    label: &str,
) -> SparseOperator {
    let n = basis.dim();
    let l = basis.num_sites();
    let n_max = basis.n_max() as u8;
    let mut trip: Vec<(u32, u32, f64)> = Vec::with_capacity(n * hops.len() / 2 + 1);
    let mut buf = vec![0u8; l];
    for k in 0..n {
        let occ = basis.state(k);
        for &(i, j, h) in hops {
            // d_i† d_j |occ⟩
            if h == 0.0 || occ[j] == 0 || occ[i] >= n_max {
                continue;
            }
            buf.copy_from_slice(occ);
            buf[j] -= 1;
            buf[i] += 1;
            let target = basis.index_of(&buf).expect("hop stays in the sector");
            let amp = ((occ[j] as u32 * (occ[i] as u32 + 1)) as f64).sqrt();
            trip.push((target as u32, k as u32, h * amp));
        }
    }
    let off = (!trip.is_empty()).then(|| Csr::from_triplets(n, trip));
    let diag = onsite.map(|v| {
        (0..n)
            .map(|k| basis.state(k).iter().zip(v).map(|(&m, &e)| m as f64 * e).sum())
            .collect()
    });
    SparseOperator::new(basis.clone(), off, diag, Complex64::new(1.0, 0.0), true, label)
}

/// Symmetric hopping `Σ_b g_b (d_i†d_j + d_j†d_i)` over the given pairs.
pub fn symmetric_hopping(
    basis: &Arc<FockBasis>,
    pairs: &[(usize, usize, f64)],
    label: &str,
) -> SparseOperator {
    let hops: Vec<_> = pairs.iter().flat_map(|&(i, j, g)| [(i, j, g), (j, i, g)]).collect();
    let mut op = one_body(basis, &hops, None, label);
    op.pairs = Some(pairs.to_vec());
    op
}
