//! Shared generators for the integration tests.
#![allow(dead_code)]

use num_complex::Complex64 as C64;
use rand::Rng;
use slabsteady::linalg::{self, CMat};
use slabsteady::rates::RateSet;

pub fn random_complex<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn random_matrix<R: Rng>(rng: &mut R, r: usize, c: usize) -> CMat {
    CMat::from_fn(r, c, |_, _| random_complex(rng))
}

/// Random positive semidefinite `n×n` matrix, `A A†` scaled by `scale`.
pub fn random_psd<R: Rng>(rng: &mut R, n: usize, scale: f64) -> CMat {
    let a = random_matrix(rng, n, n);
    let p = &a * a.adjoint();
    CMat::from_fn(n, n, |i, j| p[(i, j)] * scale)
}

/// A valid rate set with every entry of order one.
pub fn random_rates<R: Rng>(rng: &mut R, n: usize) -> RateSet {
    let gp = random_psd(rng, n, 0.5);
    let gm = random_psd(rng, n, 0.2);
    let mut lambda = linalg::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let z = random_complex(rng) * 2.0;
            lambda[(i, j)] = z;
            lambda[(j, i)] = z.conj();
        }
    }
    let vacuum = (0..n).map(|i| gp[(i, i)].re).collect();
    RateSet { gamma_plus: gp, gamma_minus: gm, lambda, vacuum_rates: vacuum }
}

/// Random full-rank density matrix.
pub fn random_density<R: Rng>(rng: &mut R, dim: usize) -> CMat {
    let a = random_matrix(rng, dim, dim);
    let p = &a * a.adjoint();
    let t = linalg::trace(&p);
    CMat::from_fn(dim, dim, |i, j| p[(i, j)] / t)
}

/// Random pure state as a density matrix.
pub fn random_pure<R: Rng>(rng: &mut R, dim: usize) -> CMat {
    let v: Vec<C64> = (0..dim).map(|_| random_complex(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    CMat::from_fn(dim, dim, |i, j| v[i] * v[j].conj() / (norm * norm))
}

pub fn projector(v: &[C64]) -> CMat {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>();
    CMat::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj() / norm)
}

/// Product thermal state with excited population `p` on every qubit.
pub fn product_thermal(n: usize, p: f64) -> CMat {
    let dim = 1 << n;
    let mut m = linalg::zeros(dim, dim);
    for s in 0..dim {
        let k = (s as u32).count_ones() as i32;
        m[(s, s)] = C64::new(p.powi(k) * (1.0 - p).powi(n as i32 - k), 0.0);
    }
    m
}
