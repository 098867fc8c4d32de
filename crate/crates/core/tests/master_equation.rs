//! The block-structured Liouvillian against a Lindblad generator assembled
//! term by term from Kronecker products.

mod common;

use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use slabsteady::linalg::{self, CMat};
use slabsteady::liouvillian::{build_heff, build_liouvillian};
use slabsteady::rates::RateSet;

fn kron(a: &CMat, b: &CMat) -> CMat {
    CMat::from_fn(a.nrows() * b.nrows(), a.ncols() * b.ncols(), |r, c| {
        a[(r / b.nrows(), c / b.ncols())] * b[(r % b.nrows(), c % b.ncols())]
    })
}

/// `σ⁻` on qubit `q` of `n`; qubit 0 is the leftmost tensor factor and
/// `|1⟩` is the excited state.
fn lowering(n: usize, q: usize) -> CMat {
    let low = linalg::from_rows(&[vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)], vec![C64::new(0.0, 0.0); 2]]);
    let mut out = linalg::identity(1);
    for k in 0..n {
        out = kron(&out, &if k == q { low.clone() } else { linalg::identity(2) });
    }
    out
}

fn scale(m: &CMat, z: C64) -> CMat {
    CMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * z)
}

/// `−i[H, ρ] + Σ Γ⁺_ij(σ_j⁻ρσ_i⁺ − ½{σ_i⁺σ_j⁻, ρ}) + Γ⁻_ij(σ_j⁺ρσ_i⁻ − ½{σ_i⁻σ_j⁺, ρ})`
/// with `H = Σ ω σ_i⁺σ_i⁻ + Σ_{i≠j} Λ_ij σ_i⁺σ_j⁻`.
fn lindblad(rates: &RateSet, omega: f64, rho: &CMat) -> CMat {
    let n = rates.len();
    let dim = 1 << n;
    let sm: Vec<CMat> = (0..n).map(|q| lowering(n, q)).collect();
    let sp: Vec<CMat> = sm.iter().map(|m| m.adjoint().to_owned()).collect();
    let mut h = linalg::zeros(dim, dim);
    for i in 0..n {
        h += scale(&(&sp[i] * &sm[i]), C64::new(omega, 0.0));
        for j in 0..n {
            if i != j {
                h += scale(&(&sp[i] * &sm[j]), rates.lambda[(i, j)]);
            }
        }
    }
    let i_unit = C64::new(0.0, 1.0);
    let mut out = scale(&(&h * rho - rho * &h), -i_unit);
    for i in 0..n {
        for j in 0..n {
            let gp = rates.gamma_plus[(i, j)];
            let gm = rates.gamma_minus[(i, j)];
            let a = &sp[i] * &sm[j];
            let b = &sm[i] * &sp[j];
            out += scale(&(&sm[j] * rho * &sp[i] - scale(&(&a * rho + rho * &a), C64::new(0.5, 0.0))), gp);
            out += scale(&(&sp[j] * rho * &sm[i] - scale(&(&b * rho + rho * &b), C64::new(0.5, 0.0))), gm);
        }
    }
    out
}

#[test]
fn structured_generator_matches_term_by_term_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 1..=4 {
        for _ in 0..3 {
            let rates = common::random_rates(&mut rng, n);
            let omega = 7.5;
            let l = build_liouvillian(&rates, omega, 10).unwrap();
            let rho = common::random_matrix(&mut rng, 1 << n, 1 << n);
            let got = l.apply(&rho);
            let want = lindblad(&rates, omega, &rho);
            let err = linalg::frobenius(&(&got - &want)) / linalg::frobenius(&want);
            assert!(err < 1e-13, "N = {n}: relative error {err:.3e}");
        }
    }
}

#[test]
fn effective_hamiltonian_matches_operator_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let n = 3;
    let rates = common::random_rates(&mut rng, n);
    let omega = 2.0;
    let sm: Vec<CMat> = (0..n).map(|q| lowering(n, q)).collect();
    let sp: Vec<CMat> = sm.iter().map(|m| m.adjoint().to_owned()).collect();
    let half_i = C64::new(0.0, 0.5);
    let mut want = linalg::zeros(8, 8);
    for i in 0..n {
        for j in 0..n {
            let coh = if i == j { C64::new(omega, 0.0) } else { rates.lambda[(i, j)] };
            want += scale(&(&sp[i] * &sm[j]), coh + half_i * rates.gamma_plus[(i, j)]);
            want += scale(&(&sm[i] * &sp[j]), half_i * rates.gamma_minus[(i, j)]);
        }
    }
    let got = build_heff(&rates, omega).to_dense();
    assert!(linalg::frobenius(&(&got - &want)) < 1e-13 * linalg::frobenius(&want));
}

#[test]
fn dense_superoperator_agrees_with_apply() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let rates = common::random_rates(&mut rng, 2);
    let l = build_liouvillian(&rates, 3.0, 10).unwrap();
    let sup = l.to_dense().unwrap();
    let rho = common::random_matrix(&mut rng, 4, 4);
    let vec_rho = CMat::from_fn(16, 1, |k, _| rho[(k % 4, k / 4)]);
    let out = &sup * &vec_rho;
    let direct = l.apply(&rho);
    for k in 0..16 {
        assert!((out[(k, 0)] - direct[(k % 4, k / 4)]).norm() < 1e-13);
    }
}

#[test]
fn invalid_rates_are_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut rates = common::random_rates(&mut rng, 2);
    rates.gamma_plus[(0, 1)] = C64::new(5.0, 0.0);
    rates.gamma_plus[(1, 0)] = C64::new(5.0, 0.0);
    assert!(build_liouvillian(&rates, 1.0, 10).is_err());
    let rates = common::random_rates(&mut rng, 3);
    assert!(build_liouvillian(&rates, 1.0, 2).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn generator_preserves_trace_and_hermiticity(seed in any::<u64>(), n in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rates = common::random_rates(&mut rng, n);
        let l = build_liouvillian(&rates, 4.0, 10).unwrap();
        let rho = common::random_density(&mut rng, 1 << n);
        let d = l.apply(&rho);
        prop_assert!(linalg::trace(&d).norm() < 1e-12);
        let anti = &d - d.adjoint();
        prop_assert!(linalg::frobenius(&anti) < 1e-12 * (1.0 + linalg::frobenius(&d)));
    }

    #[test]
    fn relabelling_emitters_permutes_the_generator(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 3;
        let rates = common::random_rates(&mut rng, n);
        let perm = [2usize, 0, 1];
        let l = build_liouvillian(&rates, 1.0, 10).unwrap();
        let lp = build_liouvillian(&rates.permuted(&perm), 1.0, 10).unwrap();
        // basis map: qubit k of the relabelled register is qubit perm[k]
        let map = |s: usize| -> usize {
            (0..n).fold(0, |acc, k| {
                let bit = (s >> (n - 1 - perm[k])) & 1;
                acc | (bit << (n - 1 - k))
            })
        };
        let rho = common::random_density(&mut rng, 8);
        let rho_p = CMat::from_fn(8, 8, |a, b| {
            let (ia, ib) = ((0..8).find(|&s| map(s) == a).unwrap(), (0..8).find(|&s| map(s) == b).unwrap());
            rho[(ia, ib)]
        });
        let out = l.apply(&rho);
        let out_p = lp.apply(&rho_p);
        for s in 0..8 {
            for t in 0..8 {
                prop_assert!((out[(s, t)] - out_p[(map(s), map(t))]).norm() < 1e-12);
            }
        }
    }
}
