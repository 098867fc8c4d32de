//! Dipole-contracted environment response functions `α_W^{ij}(ω)` (field
//! radiated by the far walls, scattered by the slab) and `α_M^{ij}(ω)`
//! (field radiated by the slab itself) for emitters above a planar slab.
//!
//! Because the slab scatters each transverse wavevector independently, the
//! double transverse integral collapses to a single integral over `k`. For
//! emitters at a common height the azimuth of `k` is integrated in closed
//! form, leaving Bessel kernels `J_0, J_1, J_2` of `k|r_i − r_j|`. The
//! propagative sector uses `k = k₀ sin θ` and the evanescent sector
//! `k = k₀ cosh u`, which absorb the `1/k_z` weights.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::{slab_coeffs_kz, Polarization, SlabSpec};
use crate::quadrature::{integrate, Tolerance};
use crate::units::{C_LIGHT, EPS0, HBAR};

pub type Tensor3 = [[C64; 3]; 3];

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ZERO_TENSOR: Tensor3 = [[ZERO; 3]; 3];

/// Positions, orientations and strengths of the emitters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmitterArray {
    /// Positions `(x, y, z)` in metres; the slab surface is `z = 0`.
    pub positions: Vec<[f64; 3]>,
    /// Unit dipole orientations (real vectors).
    pub dipoles: Vec<[f64; 3]>,
    /// Dipole magnitudes `|d^i|` in C·m.
    pub dipole_moments: Vec<f64>,
    /// Bare transition frequency ω₀ (rad/s).
    pub omega0: f64,
    /// Common renormalized transition frequency ω̃₀ (rad/s).
    pub omega: f64,
}

impl EmitterArray {
    /// Identical emitters with a common dipole orientation.
    pub fn identical(positions: Vec<[f64; 3]>, dipole: [f64; 3], moment: f64, omega: f64) -> Self {
        let n = positions.len();
        let norm = dipole.iter().map(|x| x * x).sum::<f64>().sqrt();
        let unit = dipole.map(|x| x / norm);
        EmitterArray {
            positions,
            dipoles: vec![unit; n],
            dipole_moments: vec![moment; n],
            omega0: omega,
            omega,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        if n == 0 {
            return Err(Error::Domain("emitter array is empty".into()));
        }
        if self.dipoles.len() != n || self.dipole_moments.len() != n {
            return Err(Error::Domain("positions, dipoles and moments differ in length".into()));
        }
        if !(self.omega > 0.0) {
            return Err(Error::Domain(format!("transition frequency must be positive, got {}", self.omega)));
        }
        for (i, p) in self.positions.iter().enumerate() {
            if !(p[2] > 0.0) {
                return Err(Error::Domain(format!("emitter {} must sit above the slab (z > 0), got z = {}", i + 1, p[2])));
            }
        }
        for d in &self.dipoles {
            let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-12 {
                return Err(Error::Domain(format!("dipole orientation {d:?} is not a unit vector")));
            }
        }
        let z0 = self.positions[0][2];
        if self.positions.iter().any(|p| (p[2] - z0).abs() > 1e-12 * z0) {
            return Err(Error::Unsupported("emitters at different heights above the slab".into()));
        }
        Ok(())
    }

    /// Vacuum spontaneous-emission rate `Γ₀ = |d|²ω³ / (3πħε₀c³)` of
    /// emitter `i` at the renormalized frequency.
    pub fn vacuum_rate(&self, i: usize) -> f64 {
        vacuum_rate(self.dipole_moments[i], self.omega)
    }

    pub fn height(&self) -> f64 {
        self.positions[0][2]
    }

    /// In-plane separation `r_i − r_j`.
    pub fn separation(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.positions[i][0] - self.positions[j][0],
            self.positions[i][1] - self.positions[j][1],
        ]
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let d = self.separation(i, j);
        (d[0] * d[0] + d[1] * d[1]).sqrt()
    }
}

pub fn vacuum_rate(dipole_moment: f64, omega: f64) -> f64 {
    dipole_moment * dipole_moment * omega.powi(3) / (3.0 * PI * HBAR * EPS0 * C_LIGHT.powi(3))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AngularStrategy {
    /// Closed-form azimuthal integral (Bessel kernels).
    Bessel,
    /// Numerical azimuthal integral; kept as a cross-check.
    Direct2d,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    /// Absolute tolerance on the entries of α (dimensionless).
    pub abs_tol: f64,
    /// The evanescent integral stops once `e^{−2κz}` drops below this.
    pub evanescent_cutoff: f64,
    pub angular: AngularStrategy,
    pub max_panels: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rel_tol: 1e-11,
            abs_tol: 1e-13,
            evanescent_cutoff: 1e-12,
            angular: AngularStrategy::Bessel,
            max_panels: 50_000,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::Domain("quadrature tolerances must be positive".into()));
        }
        if !(self.evanescent_cutoff > 0.0 && self.evanescent_cutoff < 1.0) {
            return Err(Error::Domain(format!("evanescent cutoff must lie in (0, 1), got {}", self.evanescent_cutoff)));
        }
        Ok(())
    }

    /// Looser profile used for large arrays.
    pub fn relaxed(&self) -> Self {
        QuadratureSpec {
            rel_tol: self.rel_tol.max(1e-9),
            abs_tol: self.abs_tol.max(1e-11),
            ..*self
        }
    }

    /// `abs_tol` is in units of α; the integrator sees sums before the
    /// overall `prefactor` is applied.
    fn tolerance(&self, prefactor: f64) -> Tolerance {
        Tolerance { rel: self.rel_tol, abs: self.abs_tol / prefactor, max_panels: self.max_panels }
    }
}

/// Which part of the transverse-wavevector domain to integrate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sector {
    Propagative,
    Evanescent,
    All,
}

/// Both response tensors for one ordered pair at one frequency.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaTensors {
    pub w: Tensor3,
    pub m: Tensor3,
}

/// `Σ_{l,l'} conj(d̃^i_l) d̃^j_{l'} T_{ll'}`.
pub fn alpha_contract(tensor: &Tensor3, di: &[C64; 3], dj: &[C64; 3]) -> C64 {
    let mut acc = ZERO;
    for l in 0..3 {
        for lp in 0..3 {
            acc += di[l].conj() * dj[lp] * tensor[l][lp];
        }
    }
    acc
}

pub fn real_dipole(d: [f64; 3]) -> [C64; 3] {
    d.map(|x| C64::new(x, 0.0))
}

pub fn alpha_tensor_w(
    i: usize,
    j: usize,
    omega: f64,
    array: &EmitterArray,
    slab: &SlabSpec,
    quad: &QuadratureSpec,
) -> Result<Tensor3> {
    Ok(pair_tensors_for(i, j, omega, array, slab, quad, Sector::All)?.w)
}

pub fn alpha_tensor_m(
    i: usize,
    j: usize,
    omega: f64,
    array: &EmitterArray,
    slab: &SlabSpec,
    quad: &QuadratureSpec,
) -> Result<Tensor3> {
    Ok(pair_tensors_for(i, j, omega, array, slab, quad, Sector::All)?.m)
}

fn pair_tensors_for(
    i: usize,
    j: usize,
    omega: f64,
    array: &EmitterArray,
    slab: &SlabSpec,
    quad: &QuadratureSpec,
    sector: Sector,
) -> Result<AlphaTensors> {
    let zi = array.positions[i][2];
    let zj = array.positions[j][2];
    if (zi - zj).abs() > 1e-12 * zi.max(zj) {
        return Err(Error::Unsupported("emitters at different heights above the slab".into()));
    }
    pair_tensors(array.separation(i, j), zi, omega, slab, quad, sector)
}

/// Polarization vector `ê^φ_p` expanded on the azimuthal basis
/// `{1, cos φ_k, sin φ_k}`: entry `[s][l]` is the Cartesian component `l` of
/// the coefficient of basis function `s`.
type AngularVector = [[C64; 3]; 3];

fn polarization_vector(p: Polarization, direction: f64, k: f64, kz: C64, omega: f64) -> AngularVector {
    let zero = [ZERO; 3];
    match p {
        Polarization::Te => [zero, [ZERO, C64::new(1.0, 0.0), ZERO], [C64::new(-1.0, 0.0), ZERO, ZERO]],
        Polarization::Tm => {
            let a = direction * C_LIGHT / omega * kz;
            [
                [ZERO, ZERO, C64::new(-C_LIGHT * k / omega, 0.0)],
                [a, ZERO, ZERO],
                [ZERO, a, ZERO],
            ]
        }
    }
}

/// Azimuthal moments `∫_0^{2π} f_s f_t e^{i k·Δ} dφ` with `f = {1, cos, sin}`.
fn bessel_moments(k: f64, radius: f64, psi: f64) -> [[C64; 3]; 3] {
    let x = k * radius;
    let (j0, j1, j2) = if x == 0.0 { (1.0, 0.0, 0.0) } else { (libm::j0(x), libm::j1(x), libm::jn(2, x)) };
    let (s1, c1) = psi.sin_cos();
    let (s2, c2) = (2.0 * psi).sin_cos();
    let two_pi = 2.0 * PI;
    let m11 = C64::new(two_pi * j0, 0.0);
    let m1c = C64::new(0.0, two_pi * j1 * c1);
    let m1s = C64::new(0.0, two_pi * j1 * s1);
    let mcc = C64::new(PI * (j0 - j2 * c2), 0.0);
    let mss = C64::new(PI * (j0 + j2 * c2), 0.0);
    let mcs = C64::new(-PI * j2 * s2, 0.0);
    [[m11, m1c, m1s], [m1c, mcc, mcs], [m1s, mcs, mss]]
}

/// Same moments by periodic trapezoid rule (spectrally accurate).
fn numeric_moments(k: f64, radius: f64, psi: f64) -> [[C64; 3]; 3] {
    let x = k * radius;
    let n = (2.0 * x.ceil() + 64.0) as usize;
    let mut m = [[ZERO; 3]; 3];
    let h = 2.0 * PI / n as f64;
    for q in 0..n {
        let phi = q as f64 * h;
        let (s, c) = phi.sin_cos();
        let f = [1.0, c, s];
        let e = C64::from_polar(h, x * (phi - psi).cos());
        for a in 0..3 {
            for b in 0..3 {
                m[a][b] += e * (f[a] * f[b]);
            }
        }
    }
    m
}

/// `∫ dφ ê_a ⊗ conj(ê_b) e^{ik·Δ}` from the azimuthal moments.
fn dyad(moments: &[[C64; 3]; 3], a: &AngularVector, b: &AngularVector) -> Tensor3 {
    let mut t = ZERO_TENSOR;
    for s in 0..3 {
        for u in 0..3 {
            let m = moments[s][u];
            if m == ZERO {
                continue;
            }
            for l in 0..3 {
                if a[s][l] == ZERO {
                    continue;
                }
                let am = a[s][l] * m;
                for lp in 0..3 {
                    t[l][lp] += am * b[u][lp].conj();
                }
            }
        }
    }
    t
}

fn add_scaled(out: &mut [C64], t: &Tensor3, scale: C64) {
    for l in 0..3 {
        for lp in 0..3 {
            out[3 * l + lp] += t[l][lp] * scale;
        }
    }
}

fn to_tensor(v: &[C64], scale: f64) -> Tensor3 {
    let mut t = ZERO_TENSOR;
    for l in 0..3 {
        for lp in 0..3 {
            t[l][lp] = v[3 * l + lp] * scale;
        }
    }
    t
}

struct PairGeometry {
    radius: f64,
    psi: f64,
    z: f64,
    omega: f64,
    strategy: AngularStrategy,
}

impl PairGeometry {
    fn moments(&self, k: f64) -> [[C64; 3]; 3] {
        match self.strategy {
            AngularStrategy::Bessel => bessel_moments(k, self.radius, self.psi),
            AngularStrategy::Direct2d => numeric_moments(k, self.radius, self.psi),
        }
    }
}

/// Response tensors for emitters at common height `z` and in-plane
/// separation `delta = r_i − r_j`.
pub fn pair_tensors(
    delta: [f64; 2],
    z: f64,
    omega: f64,
    slab: &SlabSpec,
    quad: &QuadratureSpec,
    sector: Sector,
) -> Result<AlphaTensors> {
    if !(omega > 0.0) {
        return Err(Error::Domain(format!("α needs ω > 0, got {omega}")));
    }
    if !(z > 0.0) {
        return Err(Error::Domain(format!("emitters must sit above the slab, got z = {z}")));
    }
    let radius = (delta[0] * delta[0] + delta[1] * delta[1]).sqrt();
    let geo = PairGeometry {
        radius,
        psi: delta[1].atan2(delta[0]),
        z,
        omega,
        strategy: quad.angular,
    };
    let k0 = omega / C_LIGHT;
    let prefactor = 3.0 * PI * C_LIGHT / (2.0 * omega) / (4.0 * PI * PI);
    let transparent = slab.is_transparent();
    let eps = slab.permittivity.eval(omega);

    let mut w = ZERO_TENSOR;
    let mut m = ZERO_TENSOR;

    if sector != Sector::Evanescent {
        // k = k₀ sin θ, k dk / k_z = k₀ sin θ dθ
        let phase_span = k0 * radius + 2.0 * k0 * z;
        let panels = ((phase_span / PI).ceil() as usize).clamp(4, 4000);
        let breaks: Vec<f64> = (0..=panels).map(|q| 0.5 * PI * q as f64 / panels as f64).collect();
        let integrand = |theta: f64, out: &mut [C64]| {
            out.iter_mut().for_each(|o| *o = ZERO);
            let (st, ct) = theta.sin_cos();
            let k = k0 * st;
            let kz_val = C64::new(k0 * ct, 0.0);
            let mom = geo.moments(k);
            let weight = C64::new(k0 * st, 0.0);
            let phase = C64::from_polar(1.0, 2.0 * kz_val.re * geo.z);
            for p in Polarization::BOTH {
                let up = polarization_vector(p, 1.0, k, kz_val, geo.omega);
                let down = polarization_vector(p, -1.0, k, kz_val, geo.omega);
                let (rho, tau) = if transparent {
                    (ZERO, C64::new(1.0, 0.0))
                } else {
                    slab_coeffs_kz(geo.omega, kz_val, p, eps, slab.thickness)
                };
                let pp = dyad(&mom, &up, &up);
                let mm = dyad(&mom, &down, &down);
                let scattered = tau.norm_sqr() + rho.norm_sqr();
                add_scaled(&mut out[..9], &pp, weight * scattered);
                add_scaled(&mut out[..9], &mm, weight);
                if !transparent {
                    let pm = dyad(&mom, &up, &down);
                    let mp = dyad(&mom, &down, &up);
                    add_scaled(&mut out[..9], &pm, weight * rho * phase);
                    add_scaled(&mut out[..9], &mp, weight * rho.conj() * phase.conj());
                    add_scaled(&mut out[9..], &pp, weight * (1.0 - scattered));
                }
            }
        };
        let r = integrate(integrand, &breaks, 18, quad.tolerance(prefactor))?;
        w = to_tensor(&r.value[..9], prefactor);
        m = to_tensor(&r.value[9..], prefactor);
    }

    if sector != Sector::Propagative && !transparent {
        // k = k₀ cosh u, k dk / κ = k₀ cosh u du
        let kappa_max = -quad.evanescent_cutoff.ln() / (2.0 * z);
        let u_max = (kappa_max / k0).asinh();
        let k_max = k0 * u_max.cosh();
        let mut breaks: Vec<f64> = (0..=8).map(|q| u_max * q as f64 / 8.0).collect();
        let oscillations = (((k_max - k0) * radius) / PI).ceil() as usize;
        let n_osc = oscillations.min(4000);
        for q in 1..n_osc {
            let k = k0 + (k_max - k0) * q as f64 / n_osc as f64;
            breaks.push((k / k0).acosh());
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-12 * u_max);
        let integrand = |u: f64, out: &mut [C64]| {
            out.iter_mut().for_each(|o| *o = ZERO);
            let k = k0 * u.cosh();
            let kappa = k0 * u.sinh();
            let decay = (-2.0 * kappa * geo.z).exp();
            if decay == 0.0 {
                return;
            }
            let kz_val = C64::new(0.0, kappa);
            let mom = geo.moments(k);
            let weight = k0 * u.cosh() * decay;
            for p in Polarization::BOTH {
                let up = polarization_vector(p, 1.0, k, kz_val, geo.omega);
                let (rho, _) = slab_coeffs_kz(geo.omega, kz_val, p, eps, slab.thickness);
                let pp = dyad(&mom, &up, &up);
                add_scaled(out, &pp, C64::new(2.0 * rho.im * weight, 0.0));
            }
        };
        let r = integrate(integrand, &breaks, 9, quad.tolerance(prefactor))?;
        let ev = to_tensor(&r.value, prefactor);
        for l in 0..3 {
            for lp in 0..3 {
                m[l][lp] += ev[l][lp];
            }
        }
    }
    Ok(AlphaTensors { w, m })
}

/// Contracted `α_W^{ij}` and `α_M^{ij}` for every ordered pair.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaMatrices {
    pub w: Vec<Vec<C64>>,
    pub m: Vec<Vec<C64>>,
}

/// Computes all pair kernels of an array, reusing tensors through `lookup`
/// (typically the α cache). Translational invariance means one tensor per
/// distinct separation vector.
pub fn alpha_matrices_with<F>(array: &EmitterArray, mut lookup: F) -> Result<AlphaMatrices>
where
    F: FnMut([f64; 2], f64) -> Result<AlphaTensors>,
{
    array.validate()?;
    let n = array.len();
    let z = array.height();
    let mut w = vec![vec![ZERO; n]; n];
    let mut m = vec![vec![ZERO; n]; n];
    // The kernels are Hermitian in (i, j); fill the lower triangle by
    // conjugation so Γ± come out exactly Hermitian.
    for i in 0..n {
        for j in i..n {
            let t = lookup(array.separation(i, j), z)?;
            let di = real_dipole(array.dipoles[i]);
            let dj = real_dipole(array.dipoles[j]);
            w[i][j] = alpha_contract(&t.w, &di, &dj);
            m[i][j] = alpha_contract(&t.m, &di, &dj);
            if i == j {
                w[i][i].im = 0.0;
                m[i][i].im = 0.0;
            } else {
                w[j][i] = w[i][j].conj();
                m[j][i] = m[i][j].conj();
            }
        }
    }
    Ok(AlphaMatrices { w, m })
}

pub fn alpha_matrices(array: &EmitterArray, slab: &SlabSpec, quad: &QuadratureSpec) -> Result<AlphaMatrices> {
    let omega = array.omega;
    alpha_matrices_with(array, |delta, z| pair_tensors(delta, z, omega, slab, quad, Sector::All))
}

/// Free-space `α^{ij}` for dipoles perpendicular to the separation,
/// `(3/2)[sin x/x + cos x/x² − sin x/x³]`, `x = k₀|r_i − r_j|`.
pub fn free_space_perpendicular(x: f64) -> f64 {
    if x < 1e-4 {
        return 1.0 - x * x / 5.0;
    }
    let (s, c) = x.sin_cos();
    1.5 * (s / x + c / (x * x) - s / (x * x * x))
}
