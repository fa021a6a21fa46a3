//! Action of `exp(−i·t·H)` on a vector via short Lanczos recurrences, with an
//! a-posteriori error estimate and automatic substepping.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::dense::eigh_real;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct KrylovOptions {
    pub max_dim: usize,
    pub tolerance: f64,
    /// Dimensions up to this size are reorthogonalised against the whole basis.
    pub full_reorth_below: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self { max_dim: 40, tolerance: 1e-12, full_reorth_below: 50_000 }
    }
}

fn cdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn cnorm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// `exp(−i·t·T)·e₁` for a real symmetric tridiagonal `T`.
fn small_exp(alpha: &[f64], beta: &[f64], t: f64) -> DVector<Complex64> {
    let k = alpha.len();
    let mut m = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        m[(i, i)] = alpha[i];
        if i + 1 < k {
            m[(i, i + 1)] = beta[i];
            m[(i + 1, i)] = beta[i];
        }
    }
    let (vals, vecs) = eigh_real(&m);
    DVector::from_fn(k, |r, _| {
        (0..k)
            .map(|c| Complex64::from_polar(vecs[(r, c)] * vecs[(0, c)], -t * vals[c]))
            .sum()
    })
}

/// One attempt over time `t`; `None` if the error estimate never met the tolerance.
fn attempt<F>(apply: &F, v: &[Complex64], t: f64, opts: &KrylovOptions) -> Option<Vec<Complex64>>
where
    F: Fn(&[Complex64], &mut [Complex64]),
{
    let n = v.len();
    let norm0 = cnorm(v);
    if norm0 == 0.0 {
        return Some(v.to_vec());
    }
    let m = opts.max_dim.min(n);
    let full = n <= opts.full_reorth_below;
    let mut basis: Vec<Vec<Complex64>> = vec![v.iter().map(|x| x / norm0).collect()];
    let mut alpha: Vec<f64> = Vec::with_capacity(m);
    let mut beta: Vec<f64> = Vec::with_capacity(m);
    let mut w = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..m {
        w.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
        apply(&basis[j], &mut w);
        let a = cdot(&basis[j], &w).re;
        alpha.push(a);
        if full {
            for _ in 0..2 {
                for q in &basis {
                    let p = cdot(q, &w);
                    w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= p * qi);
                }
            }
        } else {
            w.iter_mut().zip(&basis[j]).for_each(|(wi, qi)| *wi -= a * qi);
            if j > 0 {
                let b = beta[j - 1];
                w.iter_mut().zip(&basis[j - 1]).for_each(|(wi, qi)| *wi -= b * qi);
            }
        }
        let b = cnorm(&w);
        let y = small_exp(&alpha, &beta, t);
        // size of the next coefficient; dimensionless, so it holds in any units
        let err = b * t.abs() * y[j].norm();
        let invariant = b <= 1e-13 * a.abs().max(1.0);
        if err < opts.tolerance || invariant || j + 1 == n {
            let mut out = vec![Complex64::new(0.0, 0.0); n];
            for (q, c) in basis.iter().zip(y.iter()) {
                let c = c * norm0;
                out.iter_mut().zip(q).for_each(|(o, qi)| *o += c * qi);
            }
            return Some(out);
        }
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }
    None
}

/// `exp(−i·t·H)·v`, splitting `t` into substeps until each converges.
pub fn expm_action<F>(apply: F, v: &[Complex64], t: f64, opts: KrylovOptions) -> Result<Vec<Complex64>>
where
    F: Fn(&[Complex64], &mut [Complex64]),
{
    let mut pieces = 1usize;
    loop {
        let dt = t / pieces as f64;
        let mut cur = v.to_vec();
        let mut ok = true;
        for _ in 0..pieces {
            match attempt(&apply, &cur, dt, &opts) {
                Some(next) => cur = next,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Ok(cur);
        }
        pieces *= 2;
        if pieces > 1 << 16 {
            return Err(Error::Solver { iterations: pieces, residual: f64::NAN });
        }
    }
}
