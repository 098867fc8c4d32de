//! Effective Hamiltonian and the master-equation generator
//!
//! `ρ̇ = i(ρH − H†ρ) + Σ_ij Γ⁺_ij σ_j⁻ρσ_i⁺ + Γ⁻_ij σ_j⁺ρσ_i⁻`
//!
//! with `H = H_eff/ħ`. Both conserve the number of excitations, so `H` is
//! stored as one block per sector and the generator is applied matrix-free.

use num_complex::Complex64 as C64;

use crate::blocks::{qubit_bit, ExcitationBlocks};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, I, ZERO};
use crate::rates::RateSet;

pub const DEFAULT_MAX_QUBITS: usize = 10;
/// Largest register for which the 4^N superoperator is materialized.
pub const MAX_DENSE_QUBITS: usize = 5;

/// `H_eff/ħ` in rad/s, block-diagonal over excitation sectors.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveHamiltonian {
    pub omega: f64,
    /// Sector blocks without the `n ω̃₀` term.
    pub shifted: Vec<CMat>,
    pub blocks: ExcitationBlocks,
}

impl EffectiveHamiltonian {
    pub fn qubits(&self) -> usize {
        self.blocks.qubits
    }

    /// Block of sector `n` including `n ω̃₀` on the diagonal.
    pub fn block(&self, n: usize) -> CMat {
        let mut h = self.shifted[n].clone();
        for a in 0..h.nrows() {
            h[(a, a)] += C64::new(n as f64 * self.omega, 0.0);
        }
        h
    }

    pub fn to_dense(&self) -> CMat {
        let mut h = linalg::zeros(self.blocks.dim(), self.blocks.dim());
        for (n, sector) in self.blocks.sectors.iter().enumerate() {
            let b = self.block(n);
            for (a, &i) in sector.iter().enumerate() {
                for (c, &j) in sector.iter().enumerate() {
                    h[(i, j)] = b[(a, c)];
                }
            }
        }
        h
    }
}

pub fn build_heff(rates: &RateSet, omega: f64) -> EffectiveHamiltonian {
    let n = rates.len();
    let blocks = ExcitationBlocks::new(n);
    let (gp, gm, lam) = (&rates.gamma_plus, &rates.gamma_minus, &rates.lambda);
    let half_i = I * 0.5;
    let mut shifted = Vec::with_capacity(n + 1);
    for sector in &blocks.sectors {
        let d = sector.len();
        let mut h = linalg::zeros(d, d);
        for (a, &s) in sector.iter().enumerate() {
            let mut diag = ZERO;
            for q in 0..n {
                diag += if s & qubit_bit(n, q) != 0 { gp[(q, q)] } else { gm[(q, q)] };
            }
            h[(a, a)] = half_i * diag;
        }
        // ⟨a|H|b⟩ for a = b with the excitation moved from x to y.
        for (b, &s) in sector.iter().enumerate() {
            for x in 0..n {
                let bx = qubit_bit(n, x);
                if s & bx == 0 {
                    continue;
                }
                for y in 0..n {
                    let by = qubit_bit(n, y);
                    if s & by != 0 {
                        continue;
                    }
                    let a = blocks.position[(s & !bx) | by].1;
                    h[(a, b)] = lam[(y, x)] + half_i * (gp[(y, x)] + gm[(x, y)]);
                }
            }
        }
        shifted.push(h);
    }
    EffectiveHamiltonian { omega, shifted, blocks }
}

/// Immutable generator; safe to share between threads.
#[derive(Clone, Debug, PartialEq)]
pub struct Liouvillian {
    pub rates: RateSet,
    pub heff: EffectiveHamiltonian,
}

impl Liouvillian {
    pub fn qubits(&self) -> usize {
        self.heff.qubits()
    }

    pub fn dim(&self) -> usize {
        self.heff.blocks.dim()
    }

    pub fn blocks(&self) -> &ExcitationBlocks {
        &self.heff.blocks
    }

    pub fn omega(&self) -> f64 {
        self.heff.omega
    }

    /// Same dissipator in the frame rotating at ω̃₀. Steady states are
    /// block-diagonal in excitation number and therefore frame independent.
    pub fn rotating(&self) -> Liouvillian {
        let mut l = self.clone();
        l.heff.omega = 0.0;
        l
    }

    /// Scale used to judge residuals, `2‖H‖ + ‖Γ⁺‖ + ‖Γ⁻‖` (Frobenius).
    pub fn norm_estimate(&self) -> f64 {
        let h: f64 = (0..self.heff.shifted.len())
            .map(|n| linalg::frobenius(&self.heff.block(n)).powi(2))
            .sum::<f64>()
            .sqrt();
        2.0 * h + linalg::frobenius(&self.rates.gamma_plus) + linalg::frobenius(&self.rates.gamma_minus)
    }

    pub fn apply(&self, rho: &CMat) -> CMat {
        let dim = self.dim();
        assert_eq!((rho.nrows(), rho.ncols()), (dim, dim), "density matrix has the wrong shape");
        let n = self.qubits();
        let mut out = linalg::zeros(dim, dim);
        // Coherent part, one sector at a time: columns for ρH, rows for H†ρ.
        for (k, sector) in self.blocks().sectors.iter().enumerate() {
            let h = self.heff.block(k);
            let d = sector.len();
            let cols = CMat::from_fn(dim, d, |r, c| rho[(r, sector[c])]);
            let rh = &cols * &h;
            let rows = CMat::from_fn(d, dim, |r, c| rho[(sector[r], c)]);
            let hr = h.adjoint() * &rows;
            for (c, &j) in sector.iter().enumerate() {
                for r in 0..dim {
                    out[(r, j)] += I * rh[(r, c)];
                }
            }
            for (r, &i) in sector.iter().enumerate() {
                for c in 0..dim {
                    out[(i, c)] -= I * hr[(r, c)];
                }
            }
        }
        // Quantum jumps.
        let (gp, gm) = (&self.rates.gamma_plus, &self.rates.gamma_minus);
        for i in 0..n {
            let bi = qubit_bit(n, i);
            for j in 0..n {
                let bj = qubit_bit(n, j);
                let (p, m) = (gp[(i, j)], gm[(i, j)]);
                if p != ZERO {
                    for b in (0..dim).filter(|b| b & bi == 0) {
                        for a in (0..dim).filter(|a| a & bj == 0) {
                            out[(a, b)] += p * rho[(a | bj, b | bi)];
                        }
                    }
                }
                if m != ZERO {
                    for b in (0..dim).filter(|b| b & bi != 0) {
                        for a in (0..dim).filter(|a| a & bj != 0) {
                            out[(a, b)] += m * rho[(a & !bj, b & !bi)];
                        }
                    }
                }
            }
        }
        out
    }

    /// Superoperator on column-stacked density matrices, `vec(ρ)[a + D b] = ρ_ab`.
    pub fn to_dense(&self) -> Result<CMat> {
        let n = self.qubits();
        if n > MAX_DENSE_QUBITS {
            return Err(Error::Resource { n, max: MAX_DENSE_QUBITS });
        }
        let dim = self.dim();
        let mut l = linalg::zeros(dim * dim, dim * dim);
        let mut e = linalg::zeros(dim, dim);
        for b in 0..dim {
            for a in 0..dim {
                e[(a, b)] = C64::new(1.0, 0.0);
                let col = self.apply(&e);
                e[(a, b)] = ZERO;
                for bb in 0..dim {
                    for aa in 0..dim {
                        l[(aa + dim * bb, a + dim * b)] = col[(aa, bb)];
                    }
                }
            }
        }
        Ok(l)
    }
}

pub fn build_liouvillian(rates: &RateSet, omega: f64, max_qubits: usize) -> Result<Liouvillian> {
    let n = rates.len();
    if n == 0 {
        return Err(Error::Domain("need at least one qubit".into()));
    }
    if n > max_qubits {
        return Err(Error::Resource { n, max: max_qubits });
    }
    rates.validate()?;
    Ok(Liouvillian { rates: rates.clone(), heff: build_heff(rates, omega) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(gp: f64, gm: f64) -> RateSet {
        RateSet {
            gamma_plus: linalg::from_rows(&[vec![C64::new(gp, 0.0)]]),
            gamma_minus: linalg::from_rows(&[vec![C64::new(gm, 0.0)]]),
            lambda: linalg::zeros(1, 1),
            vacuum_rates: vec![gp],
        }
    }

    #[test]
    fn single_qubit_heff() {
        let h = build_heff(&single(2.0, 0.5), 10.0);
        assert_eq!(h.block(0)[(0, 0)], C64::new(0.0, 0.25));
        assert_eq!(h.block(1)[(0, 0)], C64::new(10.0, 1.0));
    }

    #[test]
    fn amplitude_damping() {
        let l = build_liouvillian(&single(3.0, 0.0), 5.0, 10).unwrap();
        let mut rho = linalg::zeros(2, 2);
        rho[(1, 1)] = C64::new(1.0, 0.0);
        let d = l.apply(&rho);
        // excited state |1⟩ is index 1 for one qubit
        assert!((d[(1, 1)] - C64::new(-3.0, 0.0)).norm() < 1e-14);
        assert!((d[(0, 0)] - C64::new(3.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn too_many_qubits() {
        let r = RateSet {
            gamma_plus: linalg::identity(3),
            gamma_minus: linalg::zeros(3, 3),
            lambda: linalg::zeros(3, 3),
            vacuum_rates: vec![1.0; 3],
        };
        assert!(matches!(build_liouvillian(&r, 1.0, 2), Err(Error::Resource { n: 3, max: 2 })));
    }
}
