//! Browser bindings. Every export is a thin wrapper over a plain function so
//! the numerics can be tested natively.

use num_complex::Complex64 as C64;
use wasm_bindgen::prelude::*;

use slabsteady::cache::AlphaCache;
use slabsteady::entanglement::{concurrence, negativity, Bipartition, MeasureKind, MeasureRow};
use slabsteady::linalg::CMat;
use slabsteady::scenario::{run_point, PointResult, Scenario};

fn triangle_config(l_over_d13: f64, wall_temperature_k: f64) -> String {
    format!(
        r#"
[geometry]
kind = "triangle-path"
height_um = 8.0
d13_um = 2.0
l_over_d13 = {l_over_d13}

[slab]
thickness_um = 0.01
temperature_K = 300.0
material = "sapphire"

[environment]
wall_temperature_K = {wall_temperature_k}

[quadrature]
rel_tol = 1e-9
abs_tol = 1e-11

[measures]
kinds = ["pair-negativity", "tripartite-negativity"]
symmetry = "none"
spectrum = true
"#
    )
}

fn solve_triangle(l_over_d13: f64, wall_temperature_k: f64) -> Result<PointResult, String> {
    let s = Scenario::from_toml(&triangle_config(l_over_d13, wall_temperature_k)).map_err(|e| e.to_string())?;
    // a fresh cache per call keeps the page stateless
    run_point(&s, 0.0, &AlphaCache::new()).map_err(|e| e.to_string())
}

fn lookup(rows: &[MeasureRow], kind: MeasureKind, set: &str) -> f64 {
    rows.iter().find(|r| r.kind == kind && r.index_set == set).map_or(f64::NAN, |r| r.value)
}

/// `[N₁₂₃, N₁₋₂, N₁₋₃]` for qubit 2 at distance `l` from qubits 1 and 3.
pub fn triangle_negativities(l_over_d13: f64, wall_temperature_k: f64) -> Result<Vec<f64>, String> {
    let p = solve_triangle(l_over_d13, wall_temperature_k)?;
    Ok(vec![
        lookup(&p.measures, MeasureKind::TripartiteNegativity, "1,2,3"),
        lookup(&p.measures, MeasureKind::PairNegativity, "1-2"),
        lookup(&p.measures, MeasureKind::PairNegativity, "1-3"),
    ])
}

/// Collective states of the triangle flattened as
/// `(sector, Re ω − nω̃₀, Im ω, decay constant, population)` per state.
pub fn triangle_spectrum(l_over_d13: f64, wall_temperature_k: f64) -> Result<Vec<f64>, String> {
    let p = solve_triangle(l_over_d13, wall_temperature_k)?;
    let omega = Scenario::from_toml(&triangle_config(l_over_d13, wall_temperature_k)).map_err(|e| e.to_string())?.omega;
    let rows = p.spectrum.unwrap_or_default();
    Ok(rows
        .iter()
        .flat_map(|r| {
            [r.sector as f64, r.omega.re - r.sector as f64 * omega, r.omega.im, r.decay_constant, r.population]
        })
        .collect())
}

/// `[negativity, concurrence]` of `p|Φ⁺⟩⟨Φ⁺| + (1 − p) I/4`.
pub fn werner(p: f64) -> Result<Vec<f64>, String> {
    if !(0.0..=1.0).contains(&p) {
        return Err(format!("p must lie in [0, 1], got {p}"));
    }
    let rho = CMat::from_fn(4, 4, |i, j| {
        let bell = if (i == 0 || i == 3) && (j == 0 || j == 3) { 0.5 * p } else { 0.0 };
        C64::new(bell + if i == j { 0.25 * (1.0 - p) } else { 0.0 }, 0.0)
    });
    let cut = Bipartition::new(2, &[0]).map_err(|e| e.to_string())?;
    let n = negativity(&rho, &cut).map_err(|e| e.to_string())?;
    let c = concurrence(&rho).map_err(|e| e.to_string())?;
    Ok(vec![n, c])
}

#[wasm_bindgen(js_name = triangleNegativities)]
pub fn triangle_negativities_js(l_over_d13: f64, wall_temperature_k: f64) -> Result<Vec<f64>, JsValue> {
    triangle_negativities(l_over_d13, wall_temperature_k).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = triangleSpectrum)]
pub fn triangle_spectrum_js(l_over_d13: f64, wall_temperature_k: f64) -> Result<Vec<f64>, JsValue> {
    triangle_spectrum(l_over_d13, wall_temperature_k).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = werner)]
pub fn werner_js(p: f64) -> Result<Vec<f64>, JsValue> {
    werner(p).map_err(|e| JsValue::from_str(&e))
}
