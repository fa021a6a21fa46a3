//! Restarted Lanczos for the lowest eigenpair of a real symmetric operator.

use nalgebra::DMatrix;

use crate::dense::eigh_real;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    pub krylov_dim: usize,
    pub max_restarts: usize,
    /// Target for `‖Hψ − Eψ‖`.
    pub tolerance: f64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { krylov_dim: 80, max_restarts: 400, tolerance: 1e-10 }
    }
}

/// Deterministic start vector with overlap on every symmetry sector.
pub fn start_vector(n: usize) -> Vec<f64> {
    let mut state: u64 = 0x9E37_79B9_7F4A_7C15;
    let mut v: Vec<f64> = (0..n)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            1.0 + ((state >> 11) as f64 / (1u64 << 53) as f64 - 0.5)
        })
        .collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lowest eigenpair of the operator applied by `apply(x, y)` (`y = H x`).
pub fn lowest_eigenpair<F>(n: usize, apply: F, opts: LanczosOptions) -> Result<(f64, Vec<f64>)>
where
    F: Fn(&[f64], &mut [f64]),
{
    let m = opts.krylov_dim.min(n).max(1);
    let mut x = start_vector(n);
    let mut w = vec![0.0; n];
    let mut last_residual = f64::INFINITY;
    for _restart in 0..opts.max_restarts {
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        let mut alpha = Vec::with_capacity(m);
        let mut beta: Vec<f64> = Vec::with_capacity(m);
        basis.push(x.clone());
        let mut breakdown = false;
        for j in 0..m {
            w.iter_mut().for_each(|v| *v = 0.0);
            apply(&basis[j], &mut w);
            let a = dot(&w, &basis[j]);
            alpha.push(a);
            // full reorthogonalisation, twice for stability
            for _ in 0..2 {
                for v in &basis {
                    let p = dot(&w, v);
                    w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= p * vi);
                }
            }
            let b = dot(&w, &w).sqrt();
            if j + 1 == m {
                beta.push(b);
                break;
            }
            if b < 1e-14 * a.abs().max(1.0) {
                beta.push(0.0);
                breakdown = true;
                break;
            }
            beta.push(b);
            basis.push(w.iter().map(|v| v / b).collect());
        }
        let k = alpha.len();
        let mut t = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alpha[i];
            if i + 1 < k {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let (_, vecs) = eigh_real(&t);
        let mut ritz = vec![0.0; n];
        for (i, v) in basis.iter().take(k).enumerate() {
            let c = vecs[(i, 0)];
            ritz.iter_mut().zip(v).for_each(|(r, vi)| *r += c * vi);
        }
        let norm = dot(&ritz, &ritz).sqrt();
        ritz.iter_mut().for_each(|r| *r /= norm);
        w.iter_mut().for_each(|v| *v = 0.0);
        apply(&ritz, &mut w);
        let e = dot(&ritz, &w);
        let residual = w.iter().zip(&ritz).map(|(hv, v)| (hv - e * v).powi(2)).sum::<f64>().sqrt();
        last_residual = residual;
        x = ritz;
        let scale = e.abs().max(1.0);
        if residual < opts.tolerance * scale || (breakdown && residual < opts.tolerance * 100.0 * scale) {
            return Ok((e, x));
        }
    }
    Err(Error::Solver { iterations: opts.max_restarts * m, residual: last_residual })
}
