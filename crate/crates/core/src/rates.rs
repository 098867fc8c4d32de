//! Master-equation coefficients Γ⁺, Γ⁻ and Λ.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::alpha::{alpha_contract, pair_tensors, real_dipole, AlphaMatrices, EmitterArray, QuadratureSpec, Sector};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, ZERO};
use crate::optics::SlabSpec;
use crate::quadrature::{integrate_scalar, Tolerance};
use crate::units::{C_LIGHT, HBAR, K_B};

/// Mean thermal occupation `1/(e^{ħω/k_BT} − 1)`.
pub fn bose_n(omega: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    1.0 / (HBAR * omega / (K_B * temperature)).exp_m1()
}

/// Coefficients of the master equation, all in rad/s.
#[derive(Clone, Debug, PartialEq)]
pub struct RateSet {
    pub gamma_plus: CMat,
    pub gamma_minus: CMat,
    /// Coherent coupling; zero diagonal.
    pub lambda: CMat,
    pub vacuum_rates: Vec<f64>,
}

impl RateSet {
    pub fn len(&self) -> usize {
        self.vacuum_rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vacuum_rates.is_empty()
    }

    pub fn with_lambda(mut self, lambda: CMat) -> Self {
        self.lambda = lambda;
        self
    }

    /// Checks Hermiticity, the zero diagonal of Λ and positivity of Γ±.
    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        for (name, m) in [("Γ⁺", &self.gamma_plus), ("Γ⁻", &self.gamma_minus), ("Λ", &self.lambda)] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::Domain(format!("{name} must be {n}×{n}")));
            }
            let scale = linalg::max_abs(m).max(f64::MIN_POSITIVE);
            for i in 0..n {
                for j in 0..n {
                    if (m[(i, j)] - m[(j, i)].conj()).norm() > 1e-12 * scale {
                        return Err(Error::Domain(format!("{name} is not Hermitian at ({i}, {j})")));
                    }
                }
            }
        }
        for i in 0..n {
            if self.lambda[(i, i)].norm() != 0.0 {
                return Err(Error::Domain("Λ must have a zero diagonal".into()));
            }
        }
        check_psd("Γ⁺", &self.gamma_plus)?;
        check_psd("Γ⁻", &self.gamma_minus)?;
        Ok(())
    }

    /// Relabels emitters: row/column `k` of the result is `perm[k]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> RateSet {
        let p = |m: &CMat| CMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(perm[i], perm[j])]);
        RateSet {
            gamma_plus: p(&self.gamma_plus),
            gamma_minus: p(&self.gamma_minus),
            lambda: p(&self.lambda),
            vacuum_rates: perm.iter().map(|&k| self.vacuum_rates[k]).collect(),
        }
    }
}

fn check_psd(which: &'static str, m: &CMat) -> Result<()> {
    let eig = linalg::herm_eigenvalues(&linalg::hermitian_part(m))?;
    let min = eig.first().copied().unwrap_or(0.0);
    let max = eig.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    if min < -1e-10 * max {
        return Err(Error::InvalidDissipator { which, min_eig: min, max_eig: max });
    }
    Ok(())
}

/// Γ± from the contracted kernels at the two temperatures. Λ is left zero;
/// attach it with [`RateSet::with_lambda`].
pub fn build_rates(alpha: &AlphaMatrices, omega: f64, t_wall: f64, t_slab: f64, vacuum_rates: &[f64]) -> Result<RateSet> {
    let n = vacuum_rates.len();
    if alpha.w.len() != n || alpha.m.len() != n {
        return Err(Error::Domain("α matrices and Γ₀ vector disagree in size".into()));
    }
    if !(omega > 0.0) || t_wall < 0.0 || t_slab < 0.0 {
        return Err(Error::Domain("need ω > 0 and non-negative temperatures".into()));
    }
    let nw = bose_n(omega, t_wall);
    let nm = bose_n(omega, t_slab);
    let mut gp = linalg::zeros(n, n);
    let mut gm = linalg::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let s = (vacuum_rates[i] * vacuum_rates[j]).sqrt();
            let (aw, am) = (alpha.w[i][j], alpha.m[i][j]);
            gp[(i, j)] = (aw * (1.0 + nw) + am * (1.0 + nm)) * s;
            gm[(i, j)] = (aw.conj() * nw + am.conj() * nm) * s;
        }
    }
    check_psd("Γ⁺", &gp)?;
    check_psd("Γ⁻", &gm)?;
    Ok(RateSet {
        gamma_plus: gp,
        gamma_minus: gm,
        lambda: linalg::zeros(n, n),
        vacuum_rates: vacuum_rates.to_vec(),
    })
}

/// Settings for the principal-value route to Λ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PvSpec {
    /// Upper frequency cutoff in units of ω̃₀ (must exceed 2).
    pub cutoff: f64,
    /// Largest accepted relative change when the cutoff is doubled.
    pub rel_tol: f64,
}

impl Default for PvSpec {
    fn default() -> Self {
        PvSpec { cutoff: 10.0, rel_tol: 1e-3 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LambdaStrategy {
    /// Free-space dipole-dipole coupling in closed form.
    VacuumAnalytic,
    /// Principal-value frequency integral over the α kernels.
    PvQuadrature(PvSpec),
    UserSupplied(CMat),
}

/// Free-space coherent coupling between two dipoles,
/// `(3/4)√(Γ₀ⁱΓ₀ʲ)[−(d̂ᵢ·d̂ⱼ − (d̂ᵢ·r̂)(d̂ⱼ·r̂)) cos x/x + (d̂ᵢ·d̂ⱼ − 3(d̂ᵢ·r̂)(d̂ⱼ·r̂))(sin x/x² + cos x/x³)]`.
pub fn vacuum_coupling(array: &EmitterArray, i: usize, j: usize) -> f64 {
    let (pi, pj) = (array.positions[i], array.positions[j]);
    let r = [pi[0] - pj[0], pi[1] - pj[1], pi[2] - pj[2]];
    let dist = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
    let rhat = r.map(|x| x / dist);
    let (di, dj) = (array.dipoles[i], array.dipoles[j]);
    let dot = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let dd = dot(di, dj);
    let proj = dot(di, rhat) * dot(dj, rhat);
    let x = array.omega * dist / C_LIGHT;
    let (s, c) = x.sin_cos();
    let g = (array.vacuum_rate(i) * array.vacuum_rate(j)).sqrt();
    0.75 * g * (-(dd - proj) * c / x + (dd - 3.0 * proj) * (s / (x * x) + c / (x * x * x)))
}

/// `P∫_{-∞}^{∞} ω'³ α(ω')/(ω − ω') dω'` with `α(−ω') = α(ω')*`, folded onto
/// the positive axis and truncated at `cutoff`. The pole is removed by
/// pairing `ω − s` with `ω + s`. Returns the value and the change produced
/// by doubling the cutoff.
pub fn pv_integral<F>(mut alpha: F, omega: f64, cutoff: f64, tol: Tolerance) -> Result<(C64, f64)>
where
    F: FnMut(f64) -> Result<C64>,
{
    if !(cutoff > 2.0 * omega) {
        return Err(Error::Domain("principal-value cutoff must exceed 2ω".into()));
    }
    let mut failure = None;
    let mut h = |u: f64| -> C64 {
        if u <= 0.0 {
            return ZERO;
        }
        match alpha(u) {
            Ok(a) => a * u.powi(3),
            Err(e) => {
                failure.get_or_insert(e);
                ZERO
            }
        }
    };
    // Folded window [0, 2ω]: the h(u)/(ω−u) part pairs symmetrically and the
    // conjugate branch −h*(u)/(ω+u) is regular.
    let (near, _) = integrate_scalar(
        |s| {
            let (lo, hi) = (h(omega - s), h(omega + s));
            (lo - hi) / s - lo.conj() / (2.0 * omega - s) - hi.conj() / (2.0 * omega + s)
        },
        0.0,
        omega,
        tol,
    )?;
    let mut tail = |a: f64, b: f64| integrate_scalar(|u| {
        let v = h(u);
        v / (omega - u) - v.conj() / (omega + u)
    }, a, b, tol);
    let (far, _) = tail(2.0 * omega, cutoff)?;
    let (extra, _) = tail(cutoff, 2.0 * cutoff)?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok((near + far + extra, extra.norm()))
}

/// Λ for the whole array.
pub fn build_lambda(
    array: &EmitterArray,
    slab: &SlabSpec,
    strategy: &LambdaStrategy,
    quad: &QuadratureSpec,
) -> Result<CMat> {
    let n = array.len();
    match strategy {
        LambdaStrategy::UserSupplied(m) => {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::Domain(format!("user Λ must be {n}×{n}")));
            }
            Ok(m.clone())
        }
        LambdaStrategy::VacuumAnalytic => {
            let mut l = linalg::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        l[(i, j)] = C64::new(vacuum_coupling(array, i, j), 0.0);
                    }
                }
            }
            Ok(l)
        }
        LambdaStrategy::PvQuadrature(pv) => {
            array.validate()?;
            let omega = array.omega;
            let z = array.height();
            let tol = Tolerance { rel: pv.rel_tol * 1e-2, abs: 0.0, max_panels: 4000 };
            let mut l = linalg::zeros(n, n);
            for i in 0..n {
                for j in i + 1..n {
                    let (di, dj) = (real_dipole(array.dipoles[i]), real_dipole(array.dipoles[j]));
                    let delta = array.separation(i, j);
                    let alpha = |u: f64| {
                        let t = pair_tensors(delta, z, u, slab, quad, Sector::All)?;
                        Ok(alpha_contract(&t.w, &di, &dj) + alpha_contract(&t.m, &di, &dj))
                    };
                    let cutoff = pv.cutoff * omega;
                    let (value, change) = pv_integral(alpha, omega, cutoff, tol)?;
                    if change > pv.rel_tol * value.norm() {
                        return Err(Error::PvDivergence { residual: change, cutoff });
                    }
                    let g = (array.vacuum_rate(i) * array.vacuum_rate(j)).sqrt();
                    l[(i, j)] = value * (g / (2.0 * PI * omega.powi(3)));
                    l[(j, i)] = l[(i, j)].conj();
                }
            }
            Ok(l)
        }
    }
}
