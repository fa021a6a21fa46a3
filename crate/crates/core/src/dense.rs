//! Small dense Hermitian helpers backed by nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

/// Largest dimension for which dense matrix functions are used.
pub const DENSE_LIMIT: usize = 2000;

fn sort_eigen<T: nalgebra::Scalar + Copy>(
    values: DVector<f64>,
    vectors: DMatrix<T>,
) -> (DVector<f64>, DMatrix<T>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let vals = DVector::from_iterator(values.len(), order.iter().map(|&k| values[k]));
    let vecs = DMatrix::from_fn(vectors.nrows(), vectors.ncols(), |r, c| vectors[(r, order[c])]);
    (vals, vecs)
}

/// Ascending eigenpairs of a real symmetric matrix.
pub fn eigh_real(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let e = SymmetricEigen::new(m.clone());
    sort_eigen(e.eigenvalues, e.eigenvectors)
}

/// Ascending eigenpairs of a complex Hermitian matrix.
pub fn eigh_complex(m: &DMatrix<Complex64>) -> (DVector<f64>, DMatrix<Complex64>) {
    let e = SymmetricEigen::new(m.clone());
    sort_eigen(e.eigenvalues, e.eigenvectors)
}

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|v| Complex64::new(v, 0.0))
}

/// `exp(−i·angle·M)` for real symmetric `M`.
pub fn unitary_real(m: &DMatrix<f64>, angle: f64) -> DMatrix<Complex64> {
    let (vals, vecs) = eigh_real(m);
    let v = to_complex(&vecs);
    let phases = DMatrix::from_diagonal(&vals.map(|e| Complex64::from_polar(1.0, -angle * e)));
    &v * phases * v.adjoint()
}

/// `exp(−i·angle·M)` for complex Hermitian `M`.
pub fn unitary_hermitian(m: &DMatrix<Complex64>, angle: f64) -> DMatrix<Complex64> {
    let (vals, v) = eigh_complex(m);
    let phases = DMatrix::from_diagonal(&vals.map(|e| Complex64::from_polar(1.0, -angle * e)));
    &v * phases * v.adjoint()
}

pub fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn commutator(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a * b - b * a
}
