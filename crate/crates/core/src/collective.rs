//! Collective eigenbasis of the non-Hermitian effective Hamiltonian and the
//! master equation rewritten in it.
//!
//! In each sector `H_n = C Ω C⁻¹`. Density matrix elements are tracked as
//! `y_{βα} = ⟨λ_β|ρ|λ_α⟩`, for which
//!
//! `ẏ_{βα} = −i(Ω_β* − Ω_α) y_{βα} + Σ P y^{(m+1,n+1)} + Σ M y^{(m−1,n−1)}`
//!
//! holds exactly, and `ρ = C^{−†} y C^{−1}` recovers the computational form.

use num_complex::Complex64 as C64;

pub use crate::liouvillian::{build_heff, EffectiveHamiltonian};

use crate::blocks::ExcitationBlocks;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, I, ONE, ZERO};
use crate::rates::RateSet;

/// Largest register for which the dense P/M tables are built.
pub const MAX_PROJECTED_QUBITS: usize = 6;
const MAX_CONDITION: f64 = 1e12;

#[derive(Clone, Debug, PartialEq)]
pub struct SectorSpectrum {
    /// Eigenvalues `Ω_α = G_α + i F_α` in rad/s, including `n ω̃₀`.
    pub values: Vec<C64>,
    /// Right eigenvectors as columns (`C`), unit norm.
    pub vectors: CMat,
    pub inverse: CMat,
}

impl SectorSpectrum {
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Total decay constant of a collective state, `2 Im Ω`.
pub fn decay_constant(omega: C64) -> f64 {
    2.0 * omega.im
}

#[derive(Clone, Debug, PartialEq)]
pub struct CollectiveSpectrum {
    pub omega: f64,
    pub sectors: Vec<SectorSpectrum>,
    pub blocks: ExcitationBlocks,
}

fn order_key(a: &C64, b: &C64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

fn orthonormalize(v: &mut CMat, cols: &[usize]) {
    for (k, &c) in cols.iter().enumerate() {
        for &p in &cols[..k] {
            let proj: C64 = (0..v.nrows()).map(|r| v[(r, p)].conj() * v[(r, c)]).sum();
            for r in 0..v.nrows() {
                let x = v[(r, p)];
                v[(r, c)] -= proj * x;
            }
        }
        normalize_column(v, c);
    }
}

fn normalize_column(v: &mut CMat, c: usize) {
    let norm = (0..v.nrows()).map(|r| v[(r, c)].norm_sqr()).sum::<f64>().sqrt();
    for r in 0..v.nrows() {
        v[(r, c)] /= norm;
    }
}

/// Makes the first non-negligible component real and positive.
fn fix_phase(v: &mut CMat, c: usize) {
    let max = (0..v.nrows()).map(|r| v[(r, c)].norm()).fold(0.0, f64::max);
    if let Some(r0) = (0..v.nrows()).find(|&r| v[(r, c)].norm() > 1e-10 * max) {
        let z = v[(r0, c)];
        let phase = z.conj() / z.norm();
        for r in 0..v.nrows() {
            v[(r, c)] *= phase;
        }
        v[(r0, c)].im = 0.0;
    }
}

fn sector_spectrum(h: &CMat, shift: f64, sector: usize) -> Result<SectorSpectrum> {
    let d = h.nrows();
    let (vals, vecs) = linalg::eigen(h)?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| order_key(&vals[a], &vals[b]));
    let values: Vec<C64> = order.iter().map(|&k| vals[k]).collect();
    let mut v = CMat::from_fn(d, d, |r, c| vecs[(r, order[c])]);
    for c in 0..d {
        normalize_column(&mut v, c);
    }
    let scale = values.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut start = 0;
    while start < d {
        let mut end = start + 1;
        while end < d && (values[end] - values[start]).norm() <= 1e-10 * scale {
            end += 1;
        }
        if end - start > 1 {
            orthonormalize(&mut v, &(start..end).collect::<Vec<_>>());
        }
        start = end;
    }
    for c in 0..d {
        fix_phase(&mut v, c);
    }
    let cond = linalg::condition(&v)?;
    if cond > MAX_CONDITION {
        return Err(Error::NotDiagonalizable { sector, condition: cond });
    }
    let inverse = linalg::inverse(&v);
    Ok(SectorSpectrum {
        values: values.into_iter().map(|z| z + shift).collect(),
        vectors: v,
        inverse,
    })
}

/// Right eigenpairs of every sector block.
pub fn spectral(heff: &EffectiveHamiltonian) -> Result<CollectiveSpectrum> {
    let sectors = heff
        .shifted
        .iter()
        .enumerate()
        .map(|(n, h)| sector_spectrum(h, n as f64 * heff.omega, n))
        .collect::<Result<Vec<_>>>()?;
    Ok(CollectiveSpectrum { omega: heff.omega, sectors, blocks: heff.blocks.clone() })
}

impl CollectiveSpectrum {
    pub fn qubits(&self) -> usize {
        self.blocks.qubits
    }

    /// First index of each sector in the sector-ordered layout.
    pub fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.sectors
            .iter()
            .map(|s| {
                let o = acc;
                acc += s.dim();
                o
            })
            .collect()
    }

    /// Eigenvector `|λ_α^{(n)}⟩` in the computational basis.
    pub fn state(&self, n: usize, alpha: usize) -> Vec<C64> {
        let mut v = vec![ZERO; self.blocks.dim()];
        for (a, &idx) in self.blocks.sectors[n].iter().enumerate() {
            v[idx] = self.sectors[n].vectors[(a, alpha)];
        }
        v
    }

    /// `y = V†ρV` in sector-ordered layout.
    pub fn to_collective(&self, rho: &CMat) -> CMat {
        let v = self.full_vectors();
        v.adjoint() * rho * &v
    }

    /// Inverse of [`to_collective`](Self::to_collective).
    pub fn from_collective(&self, y: &CMat) -> CMat {
        let vinv = self.full_inverse();
        vinv.adjoint() * y * &vinv
    }

    /// Rows: computational basis; columns: collective states in sector order.
    pub fn full_vectors(&self) -> CMat {
        let dim = self.blocks.dim();
        let offsets = self.offsets();
        let mut v = linalg::zeros(dim, dim);
        for (n, s) in self.sectors.iter().enumerate() {
            for (a, &idx) in self.blocks.sectors[n].iter().enumerate() {
                for c in 0..s.dim() {
                    v[(idx, offsets[n] + c)] = s.vectors[(a, c)];
                }
            }
        }
        v
    }

    pub fn full_inverse(&self) -> CMat {
        let dim = self.blocks.dim();
        let offsets = self.offsets();
        let mut v = linalg::zeros(dim, dim);
        for (n, s) in self.sectors.iter().enumerate() {
            for (a, &idx) in self.blocks.sectors[n].iter().enumerate() {
                for c in 0..s.dim() {
                    v[(offsets[n] + c, idx)] = s.inverse[(c, a)];
                }
            }
        }
        v
    }
}

/// `B^{(n,±i)}`: `σ_i^± |λ_α^{(n)}⟩ = Σ_ᾱ B_{αᾱ} |λ_ᾱ^{(n±1)}⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct LadderMaps {
    /// `minus[n][i]`, `d_n × d_{n−1}`; empty for `n = 0`.
    pub minus: Vec<Vec<CMat>>,
    /// `plus[n][i]`, `d_n × d_{n+1}`; empty for `n = N`.
    pub plus: Vec<Vec<CMat>>,
}

pub fn ladder_maps(spec: &CollectiveSpectrum) -> LadderMaps {
    let n_q = spec.qubits();
    let blocks = &spec.blocks;
    let mut minus = Vec::with_capacity(n_q + 1);
    let mut plus = Vec::with_capacity(n_q + 1);
    for n in 0..=n_q {
        let c = &spec.sectors[n].vectors;
        let d = c.nrows();
        let mut mi = Vec::new();
        let mut pi = Vec::new();
        for q in 0..n_q {
            if n > 0 {
                // S C: lowered eigenvectors expressed on sector n−1 states
                let dd = spec.sectors[n - 1].dim();
                let mut sc = linalg::zeros(dd, d);
                for a in 0..d {
                    if let Some(t) = blocks.lower(n, q, a) {
                        for col in 0..d {
                            sc[(t, col)] += c[(a, col)];
                        }
                    }
                }
                mi.push((&spec.sectors[n - 1].inverse * &sc).transpose().to_owned());
            }
            if n < n_q {
                let du = spec.sectors[n + 1].dim();
                let mut sc = linalg::zeros(du, d);
                for a in 0..d {
                    if let Some(t) = blocks.raise(n, q, a) {
                        for col in 0..d {
                            sc[(t, col)] += c[(a, col)];
                        }
                    }
                }
                pi.push((&spec.sectors[n + 1].inverse * &sc).transpose().to_owned());
            }
        }
        minus.push(mi);
        plus.push(pi);
    }
    LadderMaps { minus, plus }
}

fn kron_conj_left(a: &CMat, b: &CMat, scale: C64, out: &mut CMat) {
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let x = a[(i, j)].conj() * scale;
            if x == ZERO {
                continue;
            }
            for k in 0..b.nrows() {
                for l in 0..b.ncols() {
                    out[(i * b.nrows() + k, j * b.ncols() + l)] += x * b[(k, l)];
                }
            }
        }
    }
}

/// Coefficient tables of the projected master equation.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectedGenerator {
    pub spectrum: CollectiveSpectrum,
    /// `p[m][n]`: rows `(β, α)` of block `(m, n)`, columns `(β̄, ᾱ)` of
    /// block `(m+1, n+1)`, both row-major.
    pub p: Vec<Vec<CMat>>,
    /// `m[m][n]`: couples block `(m, n)` to `(m−1, n−1)`.
    pub m: Vec<Vec<CMat>>,
}

pub fn project_master(spec: &CollectiveSpectrum, rates: &RateSet) -> Result<ProjectedGenerator> {
    let n_q = spec.qubits();
    if n_q > MAX_PROJECTED_QUBITS {
        return Err(Error::Resource { n: n_q, max: MAX_PROJECTED_QUBITS });
    }
    let ladders = ladder_maps(spec);
    let dims: Vec<usize> = spec.sectors.iter().map(|s| s.dim()).collect();
    let mut p = vec![vec![linalg::zeros(0, 0); n_q + 1]; n_q + 1];
    let mut mm = vec![vec![linalg::zeros(0, 0); n_q + 1]; n_q + 1];
    for a in 0..=n_q {
        for b in 0..=n_q {
            if a < n_q && b < n_q {
                let mut t = linalg::zeros(dims[a] * dims[b], dims[a + 1] * dims[b + 1]);
                for i in 0..n_q {
                    for j in 0..n_q {
                        let g = rates.gamma_plus[(i, j)];
                        if g != ZERO {
                            kron_conj_left(&ladders.plus[a][j], &ladders.plus[b][i], g, &mut t);
                        }
                    }
                }
                p[a][b] = t;
            }
            if a > 0 && b > 0 {
                let mut t = linalg::zeros(dims[a] * dims[b], dims[a - 1] * dims[b - 1]);
                for i in 0..n_q {
                    for j in 0..n_q {
                        let g = rates.gamma_minus[(i, j)];
                        if g != ZERO {
                            kron_conj_left(&ladders.minus[a][j], &ladders.minus[b][i], g, &mut t);
                        }
                    }
                }
                mm[a][b] = t;
            }
        }
    }
    Ok(ProjectedGenerator { spectrum: spec.clone(), p, m: mm })
}

impl ProjectedGenerator {
    /// `ẏ` for `y` in the sector-ordered layout of
    /// [`CollectiveSpectrum::to_collective`].
    pub fn apply(&self, y: &CMat) -> CMat {
        let spec = &self.spectrum;
        let n_q = spec.qubits();
        let offsets = spec.offsets();
        let dims: Vec<usize> = spec.sectors.iter().map(|s| s.dim()).collect();
        let dim = spec.blocks.dim();
        let mut out = linalg::zeros(dim, dim);
        let vec_block = |a: usize, b: usize| -> Vec<C64> {
            let mut v = Vec::with_capacity(dims[a] * dims[b]);
            for r in 0..dims[a] {
                for c in 0..dims[b] {
                    v.push(y[(offsets[a] + r, offsets[b] + c)]);
                }
            }
            v
        };
        for a in 0..=n_q {
            for b in 0..=n_q {
                let (va, vb) = (&spec.sectors[a].values, &spec.sectors[b].values);
                let mut acc = vec![ZERO; dims[a] * dims[b]];
                for r in 0..dims[a] {
                    for c in 0..dims[b] {
                        let yv = y[(offsets[a] + r, offsets[b] + c)];
                        acc[r * dims[b] + c] = -I * (va[r].conj() - vb[c]) * yv;
                    }
                }
                if a < n_q && b < n_q {
                    let src = vec_block(a + 1, b + 1);
                    matvec_add(&self.p[a][b], &src, &mut acc);
                }
                if a > 0 && b > 0 {
                    let src = vec_block(a - 1, b - 1);
                    matvec_add(&self.m[a][b], &src, &mut acc);
                }
                for r in 0..dims[a] {
                    for c in 0..dims[b] {
                        out[(offsets[a] + r, offsets[b] + c)] = acc[r * dims[b] + c];
                    }
                }
            }
        }
        out
    }
}

fn matvec_add(m: &CMat, x: &[C64], out: &mut [C64]) {
    for j in 0..m.ncols() {
        let xj = x[j];
        if xj == ZERO {
            continue;
        }
        for i in 0..m.nrows() {
            out[i] += m[(i, j)] * xj;
        }
    }
}

/// Secular approximation of the projected equation, restricted to
/// block-diagonal elements between states of equal `Re Ω`.
#[derive(Clone, Debug, PartialEq)]
pub struct SecularGenerator {
    /// Retained elements `(sector, β, α)`.
    pub kept: Vec<(usize, usize, usize)>,
    pub matrix: CMat,
    pub warnings: Vec<String>,
}

/// Relative width within which eigenvalues count as exactly degenerate.
pub const EXACT_DEGENERACY: f64 = 1e-12;
pub const DEFAULT_GAP_THRESHOLD: f64 = 1e-6;

/// `gap_threshold` is relative to the largest `|Ω − n ω̃₀|` of each sector.
pub fn secular_reduce(gen: &ProjectedGenerator, gap_threshold: f64) -> SecularGenerator {
    let spec = &gen.spectrum;
    let mut kept = Vec::new();
    let mut warnings = Vec::new();
    for (n, s) in spec.sectors.iter().enumerate() {
        let shift = n as f64 * spec.omega;
        let scale = s.values.iter().map(|z| (z - shift).norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        for b in 0..s.dim() {
            for a in 0..s.dim() {
                let gap = (s.values[b].re - s.values[a].re).abs();
                if gap <= EXACT_DEGENERACY * scale {
                    kept.push((n, b, a));
                } else if gap <= gap_threshold * scale && b < a {
                    warnings.push(format!(
                        "sector {n}: states {b} and {a} are split by {gap:.3e} rad/s, inside the secular gap threshold"
                    ));
                }
            }
        }
    }
    let index: std::collections::HashMap<(usize, usize, usize), usize> =
        kept.iter().enumerate().map(|(k, &t)| (t, k)).collect();
    let dims: Vec<usize> = spec.sectors.iter().map(|s| s.dim()).collect();
    let mut m = linalg::zeros(kept.len(), kept.len());
    for (row, &(n, b, a)) in kept.iter().enumerate() {
        let vals = &spec.sectors[n].values;
        m[(row, row)] = -I * (vals[b].conj() - vals[a]);
        let r = b * dims[n] + a;
        if n + 1 < dims.len() {
            let t = &gen.p[n][n];
            for (&(n2, b2, a2), &col) in &index {
                if n2 == n + 1 {
                    m[(row, col)] += t[(r, b2 * dims[n2] + a2)];
                }
            }
        }
        if n > 0 {
            let t = &gen.m[n][n];
            for (&(n2, b2, a2), &col) in &index {
                if n2 + 1 == n {
                    m[(row, col)] += t[(r, b2 * dims[n2] + a2)];
                }
            }
        }
    }
    SecularGenerator { kept, matrix: m, warnings }
}

/// Steady state of a secular generator, as a sector-ordered `y` matrix.
pub fn secular_steady(gen: &SecularGenerator, spec: &CollectiveSpectrum) -> Result<CMat> {
    let k = gen.kept.len();
    let mut a = gen.matrix.clone();
    // tr ρ = Σ_n Σ_{βα} y_{βα} [(C†C)⁻¹]_{αβ}
    let gram_inv: Vec<CMat> = spec
        .sectors
        .iter()
        .map(|s| linalg::inverse(&(s.vectors.adjoint() * &s.vectors)))
        .collect();
    for (col, &(n, b, al)) in gen.kept.iter().enumerate() {
        a[(0, col)] = gram_inv[n][(al, b)];
    }
    let mut rhs = linalg::zeros(k, 1);
    rhs[(0, 0)] = ONE;
    let x = linalg::solve(&a, &rhs);
    if (0..k).any(|i| !x[(i, 0)].re.is_finite() || !x[(i, 0)].im.is_finite()) {
        return Err(Error::Solver("secular system is singular".into()));
    }
    let offsets = spec.offsets();
    let dim = spec.blocks.dim();
    let mut y = linalg::zeros(dim, dim);
    for (i, &(n, b, al)) in gen.kept.iter().enumerate() {
        y[(offsets[n] + b, offsets[n] + al)] = x[(i, 0)];
    }
    Ok(y)
}

/// One line of the spectrum report.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumRow {
    pub sector: usize,
    pub index: usize,
    pub omega: C64,
    pub decay_constant: f64,
    /// `⟨λ|ρ|λ⟩` in the supplied steady state.
    pub population: f64,
}

pub fn spectrum_rows(spec: &CollectiveSpectrum, rho: &CMat) -> Vec<SpectrumRow> {
    let y = spec.to_collective(rho);
    let offsets = spec.offsets();
    let mut rows = Vec::new();
    for (n, s) in spec.sectors.iter().enumerate() {
        for (k, &om) in s.values.iter().enumerate() {
            rows.push(SpectrumRow {
                sector: n,
                index: k,
                omega: om,
                decay_constant: decay_constant(om),
                population: y[(offsets[n] + k, offsets[n] + k)].re,
            });
        }
    }
    rows
}

/// Builds `H_eff`, diagonalizes it and returns the spectrum.
pub fn collective_spectrum(rates: &RateSet, omega: f64) -> Result<CollectiveSpectrum> {
    spectral(&build_heff(rates, omega))
}
