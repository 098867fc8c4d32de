mod common;

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use slabsteady::blocks::qubit_bit;
use slabsteady::collective::{
    collective_spectrum, ladder_maps, project_master, secular_reduce, secular_steady, spectrum_rows,
    DEFAULT_GAP_THRESHOLD,
};
use slabsteady::linalg::{self, CMat};
use slabsteady::liouvillian::build_liouvillian;
use slabsteady::rates::RateSet;
use slabsteady::steady::{steady_state, trace_distance, SteadyOptions};

#[test]
fn eigenvectors_diagonalize_each_sector() {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let rates = common::random_rates(&mut rng, 4);
    let omega = 12.0;
    let spec = collective_spectrum(&rates, omega).unwrap();
    let heff = slabsteady::collective::build_heff(&rates, omega);
    for (n, s) in spec.sectors.iter().enumerate() {
        let h = heff.block(n);
        for (k, &val) in s.values.iter().enumerate() {
            let v = CMat::from_fn(s.dim(), 1, |i, _| s.vectors[(i, k)]);
            let hv = &h * &v;
            for i in 0..s.dim() {
                assert!((hv[(i, 0)] - val * v[(i, 0)]).norm() < 1e-10 * (1.0 + val.norm()));
            }
        }
        let id = &s.inverse * &s.vectors;
        assert!(linalg::frobenius(&(&id - linalg::identity(s.dim()))) < 1e-10);
    }
}

#[test]
fn ladder_maps_reproduce_raising_and_lowering() {
    // σ_q^± applied to a collective state, expanded back on the neighbouring
    // sector with the B coefficients, must equal the direct application.
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let n_q = 3;
    let rates = common::random_rates(&mut rng, n_q);
    let spec = collective_spectrum(&rates, 4.0).unwrap();
    let maps = ladder_maps(&spec);
    let full = |n: usize, a: usize| spec.state(n, a);
    for n in 0..=n_q {
        for q in 0..n_q {
            let bit = qubit_bit(n_q, q);
            for a in 0..spec.sectors[n].dim() {
                let psi = full(n, a);
                let lowered: Vec<C64> =
                    (0..1 << n_q).map(|s| if s & bit == 0 { psi[s | bit] } else { C64::new(0.0, 0.0) }).collect();
                let raised: Vec<C64> =
                    (0..1 << n_q).map(|s| if s & bit != 0 { psi[s & !bit] } else { C64::new(0.0, 0.0) }).collect();
                if n > 0 {
                    let b = &maps.minus[n][q];
                    let mut rebuilt = vec![C64::new(0.0, 0.0); 1 << n_q];
                    for k in 0..spec.sectors[n - 1].dim() {
                        let v = full(n - 1, k);
                        for s in 0..1 << n_q {
                            rebuilt[s] += b[(a, k)] * v[s];
                        }
                    }
                    for s in 0..1 << n_q {
                        assert!((rebuilt[s] - lowered[s]).norm() < 1e-12);
                    }
                }
                if n < n_q {
                    let b = &maps.plus[n][q];
                    let mut rebuilt = vec![C64::new(0.0, 0.0); 1 << n_q];
                    for k in 0..spec.sectors[n + 1].dim() {
                        let v = full(n + 1, k);
                        for s in 0..1 << n_q {
                            rebuilt[s] += b[(a, k)] * v[s];
                        }
                    }
                    for s in 0..1 << n_q {
                        assert!((rebuilt[s] - raised[s]).norm() < 1e-12);
                    }
                }
            }
        }
    }
}

#[test]
fn projected_generator_is_the_master_equation_in_the_new_basis() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for n in 1..=4 {
        let rates = common::random_rates(&mut rng, n);
        let omega = 6.0;
        let spec = collective_spectrum(&rates, omega).unwrap();
        let gen = project_master(&spec, &rates).unwrap();
        let l = build_liouvillian(&rates, omega, 10).unwrap();
        let rho = common::random_density(&mut rng, 1 << n);
        let y = spec.to_collective(&rho);
        let lhs = gen.apply(&y);
        let rhs = spec.to_collective(&l.apply(&rho));
        let err = linalg::frobenius(&(&lhs - &rhs)) / linalg::frobenius(&rhs);
        assert!(err < 1e-11, "N = {n}: {err:.3e}");
        let back = spec.from_collective(&y);
        assert!(linalg::frobenius(&(&back - &rho)) < 1e-12);
    }
}

#[test]
fn projection_beyond_six_qubits_is_refused() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let rates = common::random_rates(&mut rng, 7);
    let spec = collective_spectrum(&rates, 1.0).unwrap();
    assert!(project_master(&spec, &rates).is_err());
}

fn triangle(g: f64, gm: f64, gq: f64, gqm: f64, lam: f64) -> RateSet {
    let fill = |d: f64, o: f64| CMat::from_fn(3, 3, |i, j| C64::new(if i == j { d } else { o }, 0.0));
    RateSet { gamma_plus: fill(g, gq), gamma_minus: fill(gm, gqm), lambda: fill(0.0, lam), vacuum_rates: vec![g; 3] }
}

#[test]
fn secular_steady_state_matches_full_solution_when_levels_are_split() {
    // Large Λ against small Γ: coherences between split levels are negligible.
    let rates = triangle(1.0, 0.05, 0.9, 0.04, 2.0e4);
    let omega = 1.0e6;
    let spec = collective_spectrum(&rates, omega).unwrap();
    let gen = project_master(&spec, &rates).unwrap();
    let sec = secular_reduce(&gen, DEFAULT_GAP_THRESHOLD);
    assert!(sec.warnings.is_empty(), "{:?}", sec.warnings);
    let y = secular_steady(&sec, &spec).unwrap();
    let rho_sec = spec.from_collective(&y);
    let l = build_liouvillian(&rates, omega, 10).unwrap();
    let exact = steady_state(&l, &SteadyOptions::default()).unwrap();
    assert!(trace_distance(&rho_sec, &exact.rho).unwrap() < 1e-3);
    // the degenerate one-excitation pair is equally populated
    let rows = spectrum_rows(&spec, &exact.rho);
    let mut one: Vec<_> = rows.iter().filter(|r| r.sector == 1).collect();
    one.sort_by(|a, b| a.decay_constant.partial_cmp(&b.decay_constant).unwrap());
    assert!((one[0].population - one[1].population).abs() < 1e-9);
    let total: f64 = rows.iter().map(|r| r.population).sum();
    assert!(total > 0.0);
}
