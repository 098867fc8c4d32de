//! Globally adaptive Gauss–Kronrod (10/21) quadrature for vector-valued
//! complex integrands.
//!
//! The α kernels need nine or eighteen complex outputs from one integrand
//! evaluation, so the rule works on a whole output vector at once and
//! bisects the panel with the largest error estimate until the summed
//! estimate meets the tolerance.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_panels: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { rel: 1e-11, abs: 1e-14, max_panels: 20_000 }
    }
}

#[derive(Clone, Debug)]
pub struct Integral {
    pub value: Vec<C64>,
    pub error: f64,
    pub evaluations: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: Vec<C64>,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn gk21<F>(f: &mut F, a: f64, b: f64, dim: usize, buf: &mut [C64]) -> Panel
where
    F: FnMut(f64, &mut [C64]),
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kronrod = vec![C64::new(0.0, 0.0); dim];
    let mut gauss = vec![C64::new(0.0, 0.0); dim];
    f(center, buf);
    for d in 0..dim {
        kronrod[d] = buf[d] * WGK[10];
    }
    for (j, &x) in XGK[..10].iter().enumerate() {
        let dx = half * x;
        for &s in &[-1.0, 1.0] {
            f(center + s * dx, buf);
            for d in 0..dim {
                kronrod[d] += buf[d] * WGK[j];
                if j % 2 == 1 {
                    gauss[d] += buf[d] * WG[j / 2];
                }
            }
        }
    }
    let mut err = 0.0f64;
    for d in 0..dim {
        kronrod[d] *= half;
        gauss[d] *= half;
        err = err.max((kronrod[d] - gauss[d]).norm());
    }
    Panel { a, b, value: kronrod, error: err }
}

/// Integrates `f` over the union of consecutive panels given by
/// `breakpoints`. `f(x, out)` writes `dim` values into `out`.
pub fn integrate<F>(mut f: F, breakpoints: &[f64], dim: usize, tol: Tolerance) -> Result<Integral>
where
    F: FnMut(f64, &mut [C64]),
{
    assert!(breakpoints.len() >= 2, "need at least one panel");
    let mut buf = vec![C64::new(0.0, 0.0); dim];
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for w in breakpoints.windows(2) {
        if w[1] > w[0] {
            heap.push(gk21(&mut f, w[0], w[1], dim, &mut buf));
            evaluations += 21;
        }
    }
    loop {
        let mut total = vec![C64::new(0.0, 0.0); dim];
        let mut err = 0.0;
        for p in heap.iter() {
            for d in 0..dim {
                total[d] += p.value[d];
            }
            err += p.error;
        }
        let target = tol.abs.max(tol.rel * norm(&total));
        if err <= target {
            return Ok(Integral { value: total, error: err, evaluations });
        }
        if heap.len() >= tol.max_panels {
            return Err(Error::Quadrature { residual: err, target, evaluations });
        }
        let worst = heap.pop().expect("non-empty panel set");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // panel cannot be split any further in f64
            return Err(Error::Quadrature { residual: err, target, evaluations });
        }
        heap.push(gk21(&mut f, worst.a, mid, dim, &mut buf));
        heap.push(gk21(&mut f, mid, worst.b, dim, &mut buf));
        evaluations += 42;
    }
}

/// Scalar convenience wrapper.
pub fn integrate_scalar<F>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<(C64, f64)>
where
    F: FnMut(f64) -> C64,
{
    let r = integrate(|x, out: &mut [C64]| out[0] = f(x), &[a, b], 1, tol)?;
    Ok((r.value[0], r.error))
}
