//! Symmetric tridiagonal eigenproblems by Sturm bisection and inverse
//! iteration. Used for single-particle spectra of long chains, where only the
//! lowest `N` eigenvectors are needed.

/// Number of eigenvalues strictly below `x`.
pub fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let tiny = f64::MIN_POSITIVE.sqrt();
    let mut count = 0;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        let denom = if q.abs() < tiny { tiny.copysign(q) } else { q };
        q = diag[i] - x - off[i - 1] * off[i - 1] / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn gershgorin(diag: &[f64], off: &[f64]) -> (f64, f64) {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    (lo, hi)
}

/// The `k`-th smallest eigenvalue (0-based).
pub fn kth_eigenvalue(diag: &[f64], off: &[f64], k: usize) -> f64 {
    let (mut lo, mut hi) = gershgorin(diag, off);
    let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 4.0 * f64::EPSILON * scale || mid == lo || mid == hi {
            break;
        }
        if sturm_count(diag, off, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// In-place solve of `(T − shift) x = b` by LU with partial pivoting.
fn shifted_solve(diag: &[f64], off: &[f64], shift: f64, b: &mut [f64]) {
    let n = diag.len();
    let mut d: Vec<f64> = diag.iter().map(|v| v - shift).collect();
    let mut dl: Vec<f64> = off.to_vec();
    let mut du: Vec<f64> = off.to_vec();
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    let mut swapped = vec![false; n.saturating_sub(1)];
    let eps = f64::EPSILON * gershgorin(diag, off).1.abs().max(1.0);
    for i in 0..n.saturating_sub(1) {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == 0.0 {
                d[i] = eps;
            }
            let fact = dl[i] / d[i];
            dl[i] = fact;
            d[i + 1] -= fact * du[i];
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            dl[i] = fact;
            let temp = du[i];
            du[i] = d[i + 1];
            d[i + 1] = temp - fact * d[i + 1];
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] = -fact * du[i + 1];
            }
            swapped[i] = true;
        }
    }
    if d[n - 1] == 0.0 {
        d[n - 1] = eps;
    }
    for i in 0..n.saturating_sub(1) {
        if swapped[i] {
            let t = b[i];
            b[i] = b[i + 1];
            b[i + 1] = t - dl[i] * b[i];
        } else {
            b[i + 1] -= dl[i] * b[i];
        }
    }
    b[n - 1] /= d[n - 1];
    if n > 1 {
        b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
    }
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

/// The `count` lowest eigenpairs, eigenvectors as columns in ascending order.
pub fn lowest_eigenpairs(diag: &[f64], off: &[f64], count: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = diag.len();
    assert_eq!(off.len() + 1, n.max(1));
    let count = count.min(n);
    let (lo, hi) = gershgorin(diag, off);
    let cluster = 1e-3 * (hi - lo).abs().max(1e-300);
    let values: Vec<f64> = (0..count).map(|k| kth_eigenvalue(diag, off, k)).collect();
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(count);
    for (k, &lambda) in values.iter().enumerate() {
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * 0.754_877_666).sin()).collect();
        normalize(&mut v);
        let neighbours: Vec<usize> = (0..k).filter(|&j| (values[j] - lambda).abs() < cluster).collect();
        for _ in 0..3 {
            shifted_solve(diag, off, lambda, &mut v);
            for &j in &neighbours {
                let p: f64 = v.iter().zip(&vectors[j]).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(&vectors[j]).for_each(|(a, b)| *a -= p * b);
            }
            normalize(&mut v);
        }
        // fix sign: first significant component positive
        if let Some(&first) = v.iter().find(|x| x.abs() > 1e-8) {
            if first < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
        }
        vectors.push(v);
    }
    (values, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn uniform_chain_spectrum() {
        let n = 50;
        let d = vec![0.0; n];
        let e = vec![1.0; n - 1];
        for k in 0..n {
            let exact = 2.0 * ((n - k) as f64 * PI / (n as f64 + 1.0)).cos();
            assert!((kth_eigenvalue(&d, &e, k) - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn eigenvectors_are_orthonormal_and_satisfy_equation() {
        let n = 400;
        let d: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let e = vec![1.0; n - 1];
        let (vals, vecs) = lowest_eigenpairs(&d, &e, 60);
        for (k, v) in vecs.iter().enumerate() {
            let mut res: f64 = 0.0;
            for i in 0..n {
                let mut hv = d[i] * v[i];
                if i > 0 {
                    hv += e[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    hv += e[i] * v[i + 1];
                }
                res = res.max((hv - vals[k] * v[i]).abs());
            }
            assert!(res < 1e-10, "residual {res}");
            for w in &vecs[..k] {
                let p: f64 = v.iter().zip(w).map(|(a, b)| a * b).sum();
                assert!(p.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn engineered_chain_spectrum_is_integer_spaced() {
        let len = 200;
        let d = vec![0.0; len];
        let e: Vec<f64> = (1..len).map(|j| ((j * (len - j)) as f64).sqrt() / 2.0).collect();
        let (vals, _) = lowest_eigenpairs(&d, &e, 10);
        for (k, v) in vals.iter().enumerate() {
            assert!((v - (-(len as f64 - 1.0) / 2.0 + k as f64)).abs() < 1e-9);
        }
    }
}
