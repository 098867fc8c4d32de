//! Dielectric response of the slab and its scattering coefficients for a
//! single field mode `(ω, k, p)`.
//!
//! The slab occupies `-δ < z < 0`; emitters sit in vacuum at `z > 0`. All
//! coefficients are referenced to the plane `z = 0`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::C_LIGHT;

/// One Lorentz oscillator `S ω_r² / (ω_r² − ω² − iγω)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    pub strength: f64,
    #[serde(rename = "frequency_rad_s")]
    pub frequency: f64,
    #[serde(rename = "damping_rad_s")]
    pub damping: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PermittivityModel {
    Vacuum,
    DrudeLorentz {
        eps_inf: f64,
        resonances: Vec<Resonance>,
    },
}

/// Lowest transverse-optical resonance of sapphire, in rad/s.
pub const SAPPHIRE_RESONANCE: f64 = 0.81e14;

impl PermittivityModel {
    /// Single-oscillator stand-in for sapphire (ordinary ray). The
    /// high-frequency constant and static value follow the usual far-infrared
    /// fits; the damping sets the loss tangent at a few THz.
    pub fn sapphire() -> Self {
        PermittivityModel::DrudeLorentz {
            eps_inf: 3.077,
            resonances: vec![Resonance {
                strength: 6.3,
                frequency: SAPPHIRE_RESONANCE,
                damping: 0.05 * SAPPHIRE_RESONANCE,
            }],
        }
    }

    pub fn is_vacuum(&self) -> bool {
        matches!(self, PermittivityModel::Vacuum)
    }

    pub fn validate(&self) -> Result<()> {
        if let PermittivityModel::DrudeLorentz { eps_inf, resonances } = self {
            if !(eps_inf.is_finite() && *eps_inf > 0.0) {
                return Err(Error::Domain(format!("eps_inf must be positive, got {eps_inf}")));
            }
            for r in resonances {
                if !(r.strength >= 0.0 && r.frequency > 0.0 && r.damping >= 0.0) {
                    return Err(Error::Domain(format!("invalid resonance {r:?}")));
                }
            }
        }
        Ok(())
    }

    /// Complex permittivity at angular frequency `omega` (rad/s).
    pub fn permittivity(&self, omega: f64) -> Result<C64> {
        if !(omega > 0.0) {
            return Err(Error::Domain(format!("permittivity needs ω > 0, got {omega}")));
        }
        Ok(self.eval(omega))
    }

    pub(crate) fn eval(&self, omega: f64) -> C64 {
        match self {
            PermittivityModel::Vacuum => C64::new(1.0, 0.0),
            PermittivityModel::DrudeLorentz { eps_inf, resonances } => {
                resonances.iter().fold(C64::new(*eps_inf, 0.0), |acc, r| {
                    let w2 = r.frequency * r.frequency;
                    acc + r.strength * w2 / C64::new(w2 - omega * omega, -r.damping * omega)
                })
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarization {
    Te,
    Tm,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::Te, Polarization::Tm];

    /// Index convention TE = 1, TM = 2.
    pub fn from_index(p: u8) -> Option<Self> {
        match p {
            1 => Some(Polarization::Te),
            2 => Some(Polarization::Tm),
            _ => None,
        }
    }
}

/// Label of a single field mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mode {
    pub omega: f64,
    pub k: f64,
    pub polarization: Polarization,
    /// +1 propagates towards +z, −1 towards the slab.
    pub direction: i8,
}

impl Mode {
    pub fn is_propagative(&self) -> bool {
        C_LIGHT * self.k < self.omega
    }

    pub fn is_evanescent(&self) -> bool {
        C_LIGHT * self.k > self.omega
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlabSpec {
    /// Thickness δ in metres.
    pub thickness: f64,
    pub permittivity: PermittivityModel,
    /// Slab temperature in kelvin.
    pub temperature: f64,
}

impl SlabSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.thickness >= 0.0 && self.thickness.is_finite()) {
            return Err(Error::Domain(format!("slab thickness must be ≥ 0, got {}", self.thickness)));
        }
        if !(self.temperature >= 0.0) {
            return Err(Error::Domain(format!("slab temperature must be ≥ 0, got {}", self.temperature)));
        }
        self.permittivity.validate()
    }

    /// True when the slab cannot scatter at all.
    pub fn is_transparent(&self) -> bool {
        self.thickness == 0.0 || self.permittivity.is_vacuum()
    }
}

/// Square root on the branch with non-negative imaginary part.
pub fn sqrt_upper(z: C64) -> C64 {
    let s = z.sqrt();
    if s.im < 0.0 {
        -s
    } else {
        s
    }
}

/// Normal wavevector component in vacuum, `sqrt(ω²/c² − k²)`.
pub fn kz(omega: f64, k: f64) -> C64 {
    let k0 = omega / C_LIGHT;
    // (k0 - k)(k0 + k) keeps precision near the light line
    sqrt_upper(C64::new((k0 - k) * (k0 + k), 0.0))
}

/// Normal wavevector component inside the medium, `sqrt(ε ω²/c² − k²)`.
pub fn kzm(omega: f64, k: f64, eps: C64) -> C64 {
    let k0 = omega / C_LIGHT;
    sqrt_upper(eps * (k0 * k0) - k * k)
}

/// Vacuum–medium reflection `r`, vacuum–medium transmission `t` and
/// medium–vacuum transmission `t̄` of a single interface.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fresnel {
    pub r: C64,
    pub t: C64,
    pub t_bar: C64,
}

pub fn fresnel(omega: f64, k: f64, p: Polarization, eps: C64) -> Fresnel {
    fresnel_from_kz(kz(omega, k), kzm(omega, k, eps), p, eps)
}

fn fresnel_from_kz(kz: C64, kzm: C64, p: Polarization, eps: C64) -> Fresnel {
    match p {
        Polarization::Te => {
            let d = kz + kzm;
            Fresnel {
                r: (kz - kzm) / d,
                t: 2.0 * kz / d,
                t_bar: 2.0 * kzm / d,
            }
        }
        Polarization::Tm => {
            let n = eps.sqrt();
            let d = eps * kz + kzm;
            Fresnel {
                r: (eps * kz - kzm) / d,
                t: 2.0 * n * kz / d,
                t_bar: 2.0 * n * kzm / d,
            }
        }
    }
}

/// Reflection `ρ` and transmission `τ` of the finite slab.
pub fn slab_coeffs(omega: f64, k: f64, p: Polarization, slab: &SlabSpec) -> (C64, C64) {
    let eps = slab.permittivity.eval(omega);
    slab_coeffs_with(omega, k, p, eps, slab.thickness)
}

/// As [`slab_coeffs`] with the permittivity already evaluated.
pub fn slab_coeffs_with(omega: f64, k: f64, p: Polarization, eps: C64, thickness: f64) -> (C64, C64) {
    slab_coeffs_kz(omega, kz(omega, k), p, eps, thickness)
}

/// As [`slab_coeffs_with`], parametrized by the vacuum `k_z` instead of `k`.
/// Callers that know `k_z` in closed form avoid the cancellation in
/// `k₀² − k²` near the light line.
pub fn slab_coeffs_kz(omega: f64, kz: C64, p: Polarization, eps: C64, thickness: f64) -> (C64, C64) {
    let k0 = omega / C_LIGHT;
    let kzm = sqrt_upper((eps - 1.0) * (k0 * k0) + kz * kz);
    let f = fresnel_from_kz(kz, kzm, p, eps);
    // Near the light line r → −1 and, for thin slabs, e^{2ik_z d} → 1, so
    // both 1 − e^{2ik_z d} and 1 − r² e^{2ik_z d} cancel. Using 1 − r² = t t̄
    // (either polarization) and expm1 keeps them accurate.
    let round_trip_m1 = expm1(C64::i() * 2.0 * kzm * thickness);
    let denom = f.t * f.t_bar - f.r * f.r * round_trip_m1;
    let rho = -f.r * round_trip_m1 / denom;
    let tau = f.t * f.t_bar * (C64::i() * (kzm - kz) * thickness).exp() / denom;
    (rho, tau)
}

/// `e^z − 1` without cancellation for small `|z|`.
pub fn expm1(z: C64) -> C64 {
    let half_sin = (0.5 * z.im).sin();
    C64::new(
        z.re.exp_m1() * z.im.cos() - 2.0 * half_sin * half_sin,
        z.re.exp() * z.im.sin(),
    )
}
