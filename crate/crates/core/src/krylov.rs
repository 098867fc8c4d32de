//! Restarted GMRES with right preconditioning for complex systems.

use num_complex::Complex64 as C64;

use crate::linalg::ZERO;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GmresOptions {
    pub rel_tol: f64,
    pub restart: usize,
    pub max_iter: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        GmresOptions { rel_tol: 1e-13, restart: 120, max_iter: 3000 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GmresResult {
    pub x: Vec<C64>,
    pub iterations: usize,
    /// `‖b − A x‖ / ‖b‖` recomputed from the returned solution.
    pub rel_residual: f64,
    pub converged: bool,
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Solves `A x = b` with `A` applied through `apply` and the right
/// preconditioner `M⁻¹` through `precond`.
pub fn gmres<A, P>(mut apply: A, mut precond: P, b: &[C64], opts: GmresOptions) -> GmresResult
where
    A: FnMut(&[C64]) -> Vec<C64>,
    P: FnMut(&[C64]) -> Vec<C64>,
{
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![ZERO; n];
    if bnorm == 0.0 {
        return GmresResult { x, iterations: 0, rel_residual: 0.0, converged: true };
    }
    let m = opts.restart.max(1);
    let mut iterations = 0;
    while iterations < opts.max_iter {
        let ax = apply(&x);
        let r: Vec<C64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        let mut rel = beta / bnorm;
        if rel <= opts.rel_tol {
            return GmresResult { x, iterations, rel_residual: rel, converged: true };
        }
        let mut basis: Vec<Vec<C64>> = vec![r.iter().map(|z| z / beta).collect()];
        let mut h = vec![vec![ZERO; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![ZERO; m]);
        let mut g = vec![ZERO; m + 1];
        g[0] = C64::new(beta, 0.0);
        let mut k_used = 0;
        for k in 0..m {
            iterations += 1;
            let mut w = apply(&precond(&basis[k]));
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(v, &w);
                h[i][k] = hij;
                for (wj, vj) in w.iter_mut().zip(v) {
                    *wj -= hij * vj;
                }
            }
            let wn = norm(&w);
            h[k + 1][k] = C64::new(wn, 0.0);
            for i in 0..k {
                let (a, bb) = (h[i][k], h[i + 1][k]);
                h[i][k] = a * cs[i] + sn[i] * bb;
                h[i + 1][k] = -sn[i].conj() * a + bb * cs[i];
            }
            let (a, bb) = (h[k][k], h[k + 1][k]);
            let r = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if a.norm() == 0.0 {
                cs[k] = 0.0;
                sn[k] = C64::new(1.0, 0.0);
            } else {
                cs[k] = a.norm() / r;
                sn[k] = (a / a.norm()) * bb.conj() / r;
            }
            h[k][k] = a * cs[k] + sn[k] * bb;
            h[k + 1][k] = ZERO;
            let gk = g[k];
            g[k] = gk * cs[k];
            g[k + 1] = -sn[k].conj() * gk;
            k_used = k + 1;
            rel = g[k + 1].norm() / bnorm;
            if rel <= opts.rel_tol || wn == 0.0 || iterations >= opts.max_iter {
                break;
            }
            basis.push(w.iter().map(|z| z / wn).collect());
        }
        // back substitution for the least-squares coefficients
        let mut y = vec![ZERO; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        let mut z = vec![ZERO; n];
        for (j, yj) in y.iter().enumerate() {
            for (zi, vi) in z.iter_mut().zip(&basis[j]) {
                *zi += yj * vi;
            }
        }
        let dx = precond(&z);
        for (xi, d) in x.iter_mut().zip(dx) {
            *xi += d;
        }
        if rel <= opts.rel_tol {
            break;
        }
    }
    let ax = apply(&x);
    let true_rel = norm(&b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect::<Vec<_>>()) / bnorm;
    GmresResult { x, iterations, rel_residual: true_rel, converged: true_rel <= opts.rel_tol * 10.0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn solves_random_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 40;
        let a = linalg::CMat::from_fn(n, n, |i, j| {
            let z = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * 0.1;
            if i == j { z + 3.0 } else { z }
        });
        let b: Vec<C64> = (0..n).map(|i| C64::new(i as f64, 1.0)).collect();
        let mul = |v: &[C64]| (0..n).map(|i| (0..n).map(|j| a[(i, j)] * v[j]).sum()).collect::<Vec<C64>>();
        let res = gmres(mul, |v: &[C64]| v.to_vec(), &b, GmresOptions { restart: 10, ..Default::default() });
        assert!(res.converged, "{}", res.rel_residual);
        let ax = mul(&res.x);
        for i in 0..n {
            assert!((ax[i] - b[i]).norm() < 1e-10);
        }
    }
}
