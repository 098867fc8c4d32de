//! Adaptive Dormand–Prince 5(4) integration of linear matrix ODEs `ẏ = f(y)`.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::CMat;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Initial step; `None` picks one from the size of `f(y₀)`.
    pub first_step: Option<f64>,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rel_tol: 1e-10, abs_tol: 1e-13, first_step: None, max_steps: 5_000_000 }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    /// Largest change of the trace over a single accepted step.
    pub max_trace_drift: f64,
}

// Autonomous generators only, so the nodes c_i are not needed.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn combo(y: &CMat, h: f64, terms: &[(f64, &CMat)]) -> CMat {
    let mut out = y.clone();
    for &(c, k) in terms {
        if c != 0.0 {
            let s = h * c;
            for j in 0..out.ncols() {
                for i in 0..out.nrows() {
                    out[(i, j)] += k[(i, j)] * s;
                }
            }
        }
    }
    out
}

fn trace(m: &CMat) -> C64 {
    crate::linalg::trace(m)
}

/// Integrates from `y0` at `times[0]` and returns the state at every entry
/// of `times` (which must be nondecreasing).
pub fn integrate<F>(mut f: F, y0: &CMat, times: &[f64], opts: OdeOptions) -> Result<(Vec<CMat>, OdeStats)>
where
    F: FnMut(&CMat) -> CMat,
{
    let mut stats = OdeStats::default();
    let mut out = Vec::with_capacity(times.len());
    if times.is_empty() {
        return Ok((out, stats));
    }
    if times.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::Domain("time grid must be nondecreasing".into()));
    }
    let mut t = times[0];
    let mut y = y0.clone();
    out.push(y.clone());
    let mut k1 = f(&y);
    let scale = crate::linalg::max_abs(&k1) / crate::linalg::max_abs(&y).max(opts.abs_tol);
    let mut h = opts.first_step.unwrap_or(if scale > 0.0 { 0.01 / scale } else { times[times.len() - 1] - t });
    for &target in &times[1..] {
        while t < target {
            if stats.accepted + stats.rejected >= opts.max_steps {
                return Err(Error::Solver(format!("step budget of {} exhausted at t = {t:.3e}", opts.max_steps)));
            }
            let step = h.min(target - t);
            let last = step >= target - t;
            if step <= 1e-14 * t.abs().max(target.abs()) || step < f64::MIN_POSITIVE {
                return Err(Error::Stiff { t, h: step });
            }
            let k2 = f(&combo(&y, step, &[(A21, &k1)]));
            let k3 = f(&combo(&y, step, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(&combo(&y, step, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = f(&combo(&y, step, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
            let k6 = f(&combo(&y, step, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
            let y_new = combo(&y, step, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            let k7 = f(&y_new);
            let mut err = 0.0f64;
            for j in 0..y.ncols() {
                for i in 0..y.nrows() {
                    let e = (k1[(i, j)] * E1 + k3[(i, j)] * E3 + k4[(i, j)] * E4 + k5[(i, j)] * E5 + k6[(i, j)] * E6 + k7[(i, j)] * E7) * step;
                    let sc = opts.abs_tol + opts.rel_tol * y[(i, j)].norm().max(y_new[(i, j)].norm());
                    err = err.max(e.norm() / sc);
                }
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                stats.accepted += 1;
                stats.max_trace_drift = stats.max_trace_drift.max((trace(&y_new) - trace(&y)).norm());
                t = if last { target } else { t + step };
                y = y_new;
                k1 = k7;
                // don't let a short final step shrink the next one
                if !last || factor < 1.0 {
                    h = step * factor;
                }
            } else {
                stats.rejected += 1;
                h = step * factor.min(1.0);
            }
        }
        out.push(y.clone());
    }
    Ok((out, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;

    #[test]
    fn exponential_decay() {
        let y0 = linalg::identity(1);
        let (ys, stats) = integrate(|y| CMat::from_fn(1, 1, |i, j| y[(i, j)] * C64::new(-2.0, 3.0)), &y0, &[0.0, 0.5, 1.0], OdeOptions::default()).unwrap();
        let exact = (C64::new(-2.0, 3.0)).exp();
        assert!((ys[2][(0, 0)] - exact).norm() < 1e-9, "{:?}", ys[2][(0, 0)]);
        assert!(stats.accepted > 0);
    }

    #[test]
    fn zero_generator_is_identity() {
        let y0 = linalg::from_rows(&[vec![C64::new(0.3, 0.0), C64::new(0.1, 0.2)], vec![C64::new(0.1, -0.2), C64::new(0.7, 0.0)]]);
        let (ys, _) = integrate(|y| linalg::zeros(y.nrows(), y.ncols()), &y0, &[0.0, 1.0, 100.0], OdeOptions::default()).unwrap();
        for y in ys {
            assert_eq!(y, y0);
        }
    }
}
