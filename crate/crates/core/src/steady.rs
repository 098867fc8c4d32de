//! Time evolution and stationary states of the master equation.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use log::debug;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::krylov::{gmres, GmresOptions};
use crate::linalg::{self, CMat, I, ONE, ZERO};
use crate::liouvillian::{Liouvillian, MAX_DENSE_QUBITS};
use crate::ode::{self, OdeOptions, OdeStats};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SteadyMethod {
    DenseNullspace,
    BlockedLinear,
    LongTime,
}

impl SteadyMethod {
    pub fn default_for(qubits: usize) -> Self {
        if qubits <= 4 {
            SteadyMethod::DenseNullspace
        } else {
            SteadyMethod::BlockedLinear
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SteadyMethod::DenseNullspace => "dense-nullspace",
            SteadyMethod::BlockedLinear => "blocked-linear",
            SteadyMethod::LongTime => "long-time",
        }
    }
}

impl fmt::Display for SteadyMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SteadyMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense-nullspace" => Ok(SteadyMethod::DenseNullspace),
            "blocked-linear" => Ok(SteadyMethod::BlockedLinear),
            "long-time" => Ok(SteadyMethod::LongTime),
            other => Err(Error::Config(format!(
                "unknown steady-state method '{other}' (expected dense-nullspace, blocked-linear or long-time)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteadyOptions {
    /// `None` picks by register size.
    pub method: Option<SteadyMethod>,
    /// Accepted relative residual `‖Lρ‖ / (‖L‖ ‖ρ‖)`.
    pub residual_tol: f64,
    /// Singular values below this fraction of the largest count as null.
    pub null_tol: f64,
    pub positivity_tol: f64,
    /// Largest block system solved by dense LU; GMRES above.
    pub direct_limit: usize,
    pub gmres: GmresOptions,
    pub ode: OdeOptions,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        SteadyOptions {
            method: None,
            residual_tol: 1e-10,
            null_tol: 1e-12,
            positivity_tol: 1e-10,
            direct_limit: 1000,
            gmres: GmresOptions::default(),
            ode: OdeOptions { rel_tol: 1e-11, abs_tol: 1e-15, ..OdeOptions::default() },
        }
    }
}

impl SteadyOptions {
    /// Looser targets for large registers, where GMRES round-off grows.
    pub fn relaxed(mut self) -> Self {
        self.residual_tol = 1e-8;
        self.gmres.rel_tol = 1e-11;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SteadyDiagnostics {
    pub method: SteadyMethod,
    pub residual: f64,
    pub unknowns: usize,
    pub iterations: usize,
    pub min_eigenvalue: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SteadyState {
    pub rho: CMat,
    pub diagnostics: SteadyDiagnostics,
}

/// Relative residual `‖L ρ‖_F / (‖L‖ ‖ρ‖_F)`.
pub fn residual(l: &Liouvillian, rho: &CMat) -> f64 {
    // both in the rotating frame: the bare ω would swamp the scale
    let rot = l.rotating();
    let r = rot.apply(rho);
    linalg::frobenius(&r) / (rot.norm_estimate() * linalg::frobenius(rho)).max(f64::MIN_POSITIVE)
}

/// `½ Σ|λ_k(A − B)|` for Hermitian arguments.
pub fn trace_distance(a: &CMat, b: &CMat) -> Result<f64> {
    let d = linalg::hermitian_part(&(a - b));
    Ok(0.5 * linalg::herm_eigenvalues(&d)?.iter().map(|x| x.abs()).sum::<f64>())
}

pub fn maximally_mixed(qubits: usize) -> CMat {
    let d = 1 << qubits;
    let mut m = linalg::identity(d);
    for i in 0..d {
        m[(i, i)] = C64::new(1.0 / d as f64, 0.0);
    }
    m
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<CMat>,
    pub stats: OdeStats,
}

/// Integrates the master equation in the laboratory frame.
pub fn evolve(l: &Liouvillian, rho0: &CMat, times: &[f64], opts: OdeOptions) -> Result<Trajectory> {
    let dim = l.dim();
    if rho0.nrows() != dim || rho0.ncols() != dim {
        return Err(Error::Domain(format!("initial state must be {dim}×{dim}")));
    }
    let (states, stats) = ode::integrate(|r| l.apply(r), rho0, times, opts)?;
    Ok(Trajectory { times: times.to_vec(), states, stats })
}

pub fn steady_state(l: &Liouvillian, opts: &SteadyOptions) -> Result<SteadyState> {
    let method = opts.method.unwrap_or_else(|| SteadyMethod::default_for(l.qubits()));
    // Γ-scale structure is invisible next to Λ once the ratio passes 1/ε
    let coherent = linalg::frobenius(&l.rates.lambda);
    let dissipative = linalg::frobenius(&l.rates.gamma_plus) + linalg::frobenius(&l.rates.gamma_minus);
    if coherent > opts.null_tol.recip() * dissipative {
        return Err(Error::Solver(format!(
            "coherent coupling exceeds dissipation by {:.1e}; the steady state is not resolvable in double precision",
            coherent / dissipative
        )));
    }
    let rot = l.rotating();
    let (rho, unknowns, iterations) = match method {
        SteadyMethod::DenseNullspace => dense_nullspace(&rot, opts)?,
        SteadyMethod::BlockedLinear => blocked_linear(&rot, opts)?,
        SteadyMethod::LongTime => long_time(&rot, opts)?,
    };
    let rho = linalg::hermitian_part(&rho);
    let res = residual(l, &rho);
    debug!("steady state via {method}: residual {res:.3e}, {unknowns} unknowns, {iterations} iterations");
    if !(res <= opts.residual_tol) {
        return Err(Error::Solver(format!(
            "{method} residual {res:.3e} exceeds tolerance {:.1e}",
            opts.residual_tol
        )));
    }
    let min_eig = linalg::herm_eigenvalues(&rho)?.first().copied().unwrap_or(0.0);
    if min_eig < -opts.positivity_tol {
        return Err(Error::Solver(format!("steady state has negative eigenvalue {min_eig:.3e}")));
    }
    Ok(SteadyState {
        rho,
        diagnostics: SteadyDiagnostics { method, residual: res, unknowns, iterations, min_eigenvalue: min_eig },
    })
}

fn normalize(mut rho: CMat) -> Result<CMat> {
    let tr = linalg::trace(&rho);
    if tr.norm() < 1e-300 {
        return Err(Error::Solver("stationary vector has zero trace".into()));
    }
    let inv = ONE / tr;
    for j in 0..rho.ncols() {
        for i in 0..rho.nrows() {
            rho[(i, j)] *= inv;
        }
    }
    Ok(rho)
}

fn dense_nullspace(l: &Liouvillian, opts: &SteadyOptions) -> Result<(CMat, usize, usize)> {
    if l.qubits() > MAX_DENSE_QUBITS {
        return Err(Error::Resource { n: l.qubits(), max: MAX_DENSE_QUBITS });
    }
    let sup = l.to_dense()?;
    let (s, v) = linalg::svd_right(&sup)?;
    let smax = s[0];
    let null = s.iter().filter(|&&x| x <= opts.null_tol * smax).count().max(1);
    if null > 1 {
        return Err(Error::Degenerate { dim: null });
    }
    let dim = l.dim();
    let k = s.len() - 1;
    let rho = CMat::from_fn(dim, dim, |a, b| v[(a + dim * b, k)]);
    Ok((normalize(rho)?, dim * dim, 0))
}

/// Layout of the block-diagonal unknowns: sector `k` occupies
/// `offsets[k]..offsets[k] + d_k²`, row-major.
struct BlockLayout {
    dims: Vec<usize>,
    offsets: Vec<usize>,
    total: usize,
}

impl BlockLayout {
    fn new(l: &Liouvillian) -> Self {
        let dims = l.blocks().sector_dims();
        let mut offsets = Vec::with_capacity(dims.len());
        let mut total = 0;
        for d in &dims {
            offsets.push(total);
            total += d * d;
        }
        BlockLayout { dims, offsets, total }
    }

    fn block(&self, x: &[C64], k: usize) -> CMat {
        let (d, o) = (self.dims[k], self.offsets[k]);
        CMat::from_fn(d, d, |a, b| x[o + a * d + b])
    }

    fn store(&self, out: &mut [C64], k: usize, m: &CMat) {
        let (d, o) = (self.dims[k], self.offsets[k]);
        for a in 0..d {
            for b in 0..d {
                out[o + a * d + b] = m[(a, b)];
            }
        }
    }
}

/// The generator restricted to block-diagonal operators.
fn block_apply(l: &Liouvillian, lay: &BlockLayout, x: &[C64]) -> Vec<C64> {
    let n = l.qubits();
    let blocks = l.blocks();
    let (gp, gm) = (&l.rates.gamma_plus, &l.rates.gamma_minus);
    let mut out = vec![ZERO; lay.total];
    for k in 0..=n {
        let d = lay.dims[k];
        let h = &l.heff.shifted[k];
        let xk = lay.block(x, k);
        let mut c = &xk * h - h.adjoint() * &xk;
        for j in 0..d {
            for i in 0..d {
                c[(i, j)] *= I;
            }
        }
        if k < n {
            let up = lay.block(x, k + 1);
            for i in 0..n {
                for j in 0..n {
                    let g = gp[(i, j)];
                    if g == ZERO {
                        continue;
                    }
                    for a in 0..d {
                        let Some(ra) = blocks.raise(k, j, a) else { continue };
                        for b in 0..d {
                            if let Some(rb) = blocks.raise(k, i, b) {
                                c[(a, b)] += g * up[(ra, rb)];
                            }
                        }
                    }
                }
            }
        }
        if k > 0 {
            let down = lay.block(x, k - 1);
            for i in 0..n {
                for j in 0..n {
                    let g = gm[(i, j)];
                    if g == ZERO {
                        continue;
                    }
                    for a in 0..d {
                        let Some(la) = blocks.lower(k, j, a) else { continue };
                        for b in 0..d {
                            if let Some(lb) = blocks.lower(k, i, b) {
                                c[(a, b)] += g * down[(la, lb)];
                            }
                        }
                    }
                }
            }
        }
        lay.store(&mut out, k, &c);
    }
    out
}

/// Block system with the ground-population equation replaced by `tr ρ = 1`.
fn constrained_apply(l: &Liouvillian, lay: &BlockLayout, x: &[C64]) -> Vec<C64> {
    let mut y = block_apply(l, lay, x);
    let mut tr = ZERO;
    for (k, &d) in lay.dims.iter().enumerate() {
        for a in 0..d {
            tr += x[lay.offsets[k] + a * d + a];
        }
    }
    y[0] = tr;
    y
}

/// Inverts the coherent part `X ↦ i(XH − H†X)` sector by sector through the
/// eigendecomposition `H = V Ω V⁻¹`.
struct SylvesterPreconditioner {
    sectors: Vec<Option<(CMat, CMat, Vec<C64>)>>,
}

impl SylvesterPreconditioner {
    fn new(l: &Liouvillian) -> Self {
        let sectors = l
            .heff
            .shifted
            .iter()
            .enumerate()
            .map(|(k, h)| {
                if k == 0 {
                    return None;
                }
                let (vals, v) = linalg::eigen(h).ok()?;
                let vinv = linalg::inverse(&v);
                Some((v, vinv, vals))
            })
            .collect();
        SylvesterPreconditioner { sectors }
    }

    fn apply(&self, lay: &BlockLayout, r: &[C64]) -> Vec<C64> {
        let mut out = r.to_vec();
        for (k, sec) in self.sectors.iter().enumerate() {
            let Some((v, vinv, vals)) = sec else { continue };
            let rk = lay.block(r, k);
            let mut y = v.adjoint() * &rk * v;
            let d = vals.len();
            for b in 0..d {
                for a in 0..d {
                    let mut den = I * (vals[b] - vals[a].conj());
                    if den.norm() < 1e-300 {
                        den = ONE;
                    }
                    y[(a, b)] /= den;
                }
            }
            let x = vinv.adjoint() * &y * vinv;
            lay.store(&mut out, k, &x);
        }
        out
    }
}

fn blocked_linear(l: &Liouvillian, opts: &SteadyOptions) -> Result<(CMat, usize, usize)> {
    let lay = BlockLayout::new(l);
    let u = lay.total;
    let mut rhs = vec![ZERO; u];
    rhs[0] = ONE;
    let (x, iterations) = if u <= opts.direct_limit {
        let mut a = linalg::zeros(u, u);
        let mut e = vec![ZERO; u];
        for c in 0..u {
            e[c] = ONE;
            let col = constrained_apply(l, &lay, &e);
            e[c] = ZERO;
            for (r, v) in col.into_iter().enumerate() {
                a[(r, c)] = v;
            }
        }
        let lu = a.full_piv_lu();
        let b = CMat::from_fn(u, 1, |i, _| rhs[i]);
        let sol = faer::linalg::solvers::Solve::solve(&lu, &b);
        ((0..u).map(|i| sol[(i, 0)]).collect::<Vec<_>>(), 0)
    } else {
        let pre = SylvesterPreconditioner::new(l);
        let res = gmres(|v| constrained_apply(l, &lay, v), |v| pre.apply(&lay, v), &rhs, opts.gmres);
        debug!("GMRES: {} iterations, relative residual {:.3e}", res.iterations, res.rel_residual);
        if !res.converged {
            // round-off floors sit near 1e-12 for N ≳ 7; the Liouvillian
            // residual check in `steady_state` is the real acceptance test
            debug!("GMRES stalled at relative residual {:.3e}", res.rel_residual);
        }
        (res.x, res.iterations)
    };
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Solver("block system is singular".into()));
    }
    let blocks = l.blocks();
    let dim = l.dim();
    let mut rho = linalg::zeros(dim, dim);
    for (k, sector) in blocks.sectors.iter().enumerate() {
        let xk = lay.block(&x, k);
        for (a, &i) in sector.iter().enumerate() {
            for (b, &j) in sector.iter().enumerate() {
                rho[(i, j)] = xk[(a, b)];
            }
        }
    }
    Ok((normalize(rho)?, u, iterations))
}

fn long_time(l: &Liouvillian, opts: &SteadyOptions) -> Result<(CMat, usize, usize)> {
    let gp = &l.rates.gamma_plus;
    let gm = &l.rates.gamma_minus;
    let fastest = (0..l.qubits()).map(|i| gp[(i, i)].re + gm[(i, i)].re).fold(0.0, f64::max);
    if !(fastest > 0.0) {
        return Err(Error::Solver("no dissipation: long-time limit does not exist".into()));
    }
    let chunk = 10.0 / fastest;
    let mut rho = maximally_mixed(l.qubits());
    let mut steps = 0;
    for _ in 0..10_000 {
        let (states, stats) = ode::integrate(|r| l.apply(r), &rho, &[0.0, chunk], opts.ode)?;
        steps += stats.accepted;
        rho = states.into_iter().last().expect("two output times");
        if residual(l, &linalg::hermitian_part(&rho)) <= opts.residual_tol * 0.5 {
            return Ok((normalize(rho)?, l.dim() * l.dim(), steps));
        }
        if steps > opts.ode.max_steps {
            break;
        }
    }
    Err(Error::Solver(format!(
        "long-time integration did not settle (residual {:.3e} after {steps} steps)",
        residual(l, &rho)
    )))
}

/// Writes a matrix as `# rows cols` followed by one `re,im` pair per line in
/// row-major order.
pub fn write_matrix<W: Write>(mut w: W, m: &CMat) -> Result<()> {
    writeln!(w, "# {} {}", m.nrows(), m.ncols())?;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            writeln!(w, "{:e},{:e}", z.re, z.im)?;
        }
    }
    Ok(())
}

pub fn read_matrix<R: BufRead>(r: R) -> Result<CMat> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| Error::Config("empty matrix file".into()))??;
    let dims: Vec<usize> = header
        .trim_start_matches('#')
        .split_whitespace()
        .map(|s| s.parse().map_err(|_| Error::Config(format!("bad matrix header '{header}'"))))
        .collect::<Result<_>>()?;
    let [rows, cols] = dims[..] else {
        return Err(Error::Config(format!("bad matrix header '{header}'")));
    };
    let mut values = Vec::with_capacity(rows * cols);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (re, im) = line
            .split_once(',')
            .ok_or_else(|| Error::Config(format!("expected 're,im', got '{line}'")))?;
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad number '{s}'")));
        values.push(C64::new(parse(re)?, parse(im)?));
    }
    if values.len() != rows * cols {
        return Err(Error::Config(format!("expected {} entries, found {}", rows * cols, values.len())));
    }
    Ok(CMat::from_fn(rows, cols, |i, j| values[i * cols + j]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in [SteadyMethod::DenseNullspace, SteadyMethod::BlockedLinear, SteadyMethod::LongTime] {
            assert_eq!(m.name().parse::<SteadyMethod>().unwrap(), m);
        }
        assert!("svd".parse::<SteadyMethod>().is_err());
    }

    #[test]
    fn matrix_text_round_trip() {
        let m = CMat::from_fn(3, 2, |i, j| C64::new(i as f64 / 3.0, -(j as f64) * 1e-17));
        let mut buf = Vec::new();
        write_matrix(&mut buf, &m).unwrap();
        let back = read_matrix(&buf[..]).unwrap();
        assert_eq!(back, m);
    }
}
