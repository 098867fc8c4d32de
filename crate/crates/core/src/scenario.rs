//! Scenario configuration, emitter geometries, sweeps and CSV output.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use num_complex::Complex64 as C64;
use serde::Deserialize;

use crate::alpha::{alpha_matrices_with, AngularStrategy, EmitterArray, QuadratureSpec};
use crate::cache::AlphaCache;
use crate::collective::{collective_spectrum, spectrum_rows, SpectrumRow};
use crate::entanglement::{measure_suite, MeasureKind, MeasureRow, Symmetry};
use crate::error::{Error, Result};
use crate::liouvillian::{build_liouvillian, DEFAULT_MAX_QUBITS};
use crate::optics::{PermittivityModel, Resonance, SlabSpec};
use crate::rates::{build_lambda, build_rates, LambdaStrategy, PvSpec};
use crate::steady::{steady_state, SteadyDiagnostics, SteadyMethod, SteadyOptions};
use crate::units::{DEBYE, MICRON};

/// Registers at least this large run with relaxed tolerances.
pub const RELAXED_FROM: usize = 8;
/// Without a declared symmetry, bipartitions are enumerated up to this size.
pub const FULL_BIPARTITION_LIMIT: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeometryKind {
    /// Regular polygon inscribed in a circle, optionally with the last
    /// vertex pushed radially outward.
    Polygon,
    /// Three qubits: 1 and 3 fixed a distance `d₁₃` apart, qubit 2 on the
    /// perpendicular bisector at distance `l` from both.
    TrianglePath,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Geometry {
    pub kind: GeometryKind,
    pub qubits: usize,
    /// Circumradius in metres (polygon).
    pub radius: f64,
    /// Height above the slab in metres.
    pub height: f64,
    /// Radial displacement of the last vertex in metres (polygon).
    pub displacement: f64,
    /// Distance between qubits 1 and 3 in metres (triangle path).
    pub d13: f64,
    pub l_over_d13: f64,
}

impl Geometry {
    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if !(self.height > 0.0) {
            return cfg(format!("height must be positive, got {} m", self.height));
        }
        match self.kind {
            GeometryKind::Polygon => {
                if self.qubits < 2 {
                    return cfg(format!("a polygon needs at least 2 qubits, got {}", self.qubits));
                }
                if !(self.radius > 0.0) {
                    return cfg(format!("radius must be positive, got {} m", self.radius));
                }
                if !(self.displacement >= 0.0) {
                    return cfg(format!("displacement must be ≥ 0, got {} m", self.displacement));
                }
            }
            GeometryKind::TrianglePath => {
                if self.qubits != 3 {
                    return cfg(format!("the triangle path has 3 qubits, got {}", self.qubits));
                }
                if !(self.d13 > 0.0) {
                    return cfg(format!("d13 must be positive, got {} m", self.d13));
                }
                if !(self.l_over_d13 >= 0.5) {
                    return cfg(format!("l/d13 must be ≥ 0.5, got {}", self.l_over_d13));
                }
            }
        }
        Ok(())
    }

    /// Emitter positions in metres; qubit `q` is vertex `q`.
    pub fn positions(&self) -> Vec<[f64; 3]> {
        match self.kind {
            GeometryKind::Polygon => polygon_positions(self.qubits, self.radius, self.height, self.displacement),
            GeometryKind::TrianglePath => triangle_path_positions(self.d13, self.l_over_d13, self.height),
        }
    }
}

/// Vertices of the regular `n`-gon of circumradius `r` at height `z`; the
/// last vertex is moved radially outward by `x`.
pub fn polygon_positions(n: usize, r: f64, z: f64, x: f64) -> Vec<[f64; 3]> {
    (0..n)
        .map(|q| {
            let phi = 2.0 * PI * q as f64 / n as f64;
            let rr = if q + 1 == n { r + x } else { r };
            [rr * phi.cos(), rr * phi.sin(), z]
        })
        .collect()
}

/// Qubits 1 and 3 at `(∓d₁₃/2, 0)`, qubit 2 at `(0, h)` with
/// `h = √(l² − d₁₃²/4)`. At `l/d₁₃ = 1/2` the three are collinear.
pub fn triangle_path_positions(d13: f64, l_over_d13: f64, z: f64) -> Vec<[f64; 3]> {
    let l = l_over_d13 * d13;
    let h = (l * l - 0.25 * d13 * d13).max(0.0).sqrt();
    vec![[-0.5 * d13, 0.0, z], [0.0, h, z], [0.5 * d13, 0.0, z]]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
pub enum SweepVariable {
    #[serde(rename = "l_over_d13")]
    LOverD13,
    #[serde(rename = "radius_um")]
    RadiusUm,
    #[serde(rename = "x_over_r")]
    XOverR,
    #[serde(rename = "qubits")]
    Qubits,
    #[serde(rename = "wall_temperature_K")]
    WallTemperatureK,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::LOverD13 => "l_over_d13",
            SweepVariable::RadiusUm => "radius_um",
            SweepVariable::XOverR => "x_over_r",
            SweepVariable::Qubits => "qubits",
            SweepVariable::WallTemperatureK => "wall_temperature_K",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    /// Ignored for `qubits`, which steps through every integer.
    #[serde(default)]
    pub points: Option<usize>,
    #[serde(default)]
    pub spacing: Spacing,
}

impl SweepAxis {
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.start.is_finite() && self.stop.is_finite()) || self.start > self.stop {
            return Err(Error::Domain(format!("sweep range [{}, {}] is not ordered", self.start, self.stop)));
        }
        if self.variable == SweepVariable::Qubits {
            let (a, b) = (self.start.ceil() as i64, self.stop.floor() as i64);
            if a > b {
                return Err(Error::Domain("sweep over qubits contains no integer".into()));
            }
            return Ok((a..=b).map(|n| n as f64).collect());
        }
        let n = self.points.unwrap_or(0);
        if n == 0 {
            return Err(Error::Domain("sweep needs at least one point".into()));
        }
        if n == 1 || self.start == self.stop {
            return Ok(vec![self.start; n.min(1)]);
        }
        let t = |k: usize| k as f64 / (n - 1) as f64;
        match self.spacing {
            Spacing::Linear => Ok((0..n).map(|k| self.start + (self.stop - self.start) * t(k)).collect()),
            Spacing::Log => {
                if !(self.start > 0.0) {
                    return Err(Error::Domain("log spacing needs a positive start".into()));
                }
                let (la, lb) = (self.start.ln(), self.stop.ln());
                let mut v: Vec<f64> = (0..n).map(|k| (la + (lb - la) * t(k)).exp()).collect();
                v[0] = self.start;
                v[n - 1] = self.stop;
                Ok(v)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymmetryChoice {
    /// Dihedral for an undisplaced polygon, mirror for the triangle path,
    /// none otherwise.
    #[default]
    Auto,
    None,
    Dihedral,
    Mirror,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaChoice {
    #[default]
    VacuumAnalytic,
    PvQuadrature,
}

/// Validated scenario in SI units.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub geometry: Geometry,
    /// Unit dipole orientation shared by all emitters.
    pub dipole: [f64; 3],
    /// Dipole magnitude in C·m.
    pub dipole_moment: f64,
    /// Transition frequency ω̃₀ in rad/s.
    pub omega: f64,
    pub slab: SlabSpec,
    /// Wall (environment) temperature in kelvin.
    pub wall_temperature: f64,
    pub quadrature: QuadratureSpec,
    pub lambda: LambdaChoice,
    pub pv: PvSpec,
    pub method: Option<SteadyMethod>,
    pub max_qubits: usize,
    pub measures: Vec<MeasureKind>,
    pub symmetry: SymmetryChoice,
    pub spectrum: bool,
    pub sweep: Option<SweepAxis>,
    pub output: Option<PathBuf>,
}

// ---- config file layer: every dimensional key carries its unit ----

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    geometry: GeometryConfig,
    #[serde(default)]
    emitters: EmittersConfig,
    slab: SlabConfig,
    environment: EnvironmentConfig,
    #[serde(default)]
    quadrature: QuadratureConfig,
    #[serde(default)]
    solver: SolverConfig,
    #[serde(default)]
    measures: MeasuresConfig,
    sweep: Option<SweepAxis>,
    #[serde(default)]
    output: OutputConfig,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometryConfig {
    kind: GeometryKind,
    #[serde(default)]
    qubits: Option<usize>,
    #[serde(default)]
    radius_um: Option<f64>,
    height_um: f64,
    #[serde(default)]
    displacement_um: f64,
    #[serde(default)]
    d13_um: Option<f64>,
    #[serde(default)]
    l_over_d13: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EmittersConfig {
    #[serde(default = "default_dipole")]
    dipole: [f64; 3],
    #[serde(default = "default_moment")]
    dipole_moment_debye: f64,
    #[serde(default = "default_frequency")]
    transition_frequency_rad_s: f64,
}

fn default_dipole() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}
fn default_moment() -> f64 {
    1.0
}
fn default_frequency() -> f64 {
    0.05e14
}

impl Default for EmittersConfig {
    fn default() -> Self {
        EmittersConfig {
            dipole: default_dipole(),
            dipole_moment_debye: default_moment(),
            transition_frequency_rad_s: default_frequency(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Material {
    Sapphire,
    Vacuum,
    DrudeLorentz,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SlabConfig {
    thickness_um: f64,
    #[serde(rename = "temperature_K")]
    temperature_k: f64,
    material: Material,
    #[serde(default)]
    eps_inf: Option<f64>,
    #[serde(default)]
    resonances: Vec<Resonance>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EnvironmentConfig {
    #[serde(rename = "wall_temperature_K")]
    wall_temperature_k: f64,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuadratureConfig {
    rel_tol: Option<f64>,
    abs_tol: Option<f64>,
    evanescent_cutoff: Option<f64>,
    angular: Option<AngularStrategy>,
    max_panels: Option<usize>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverConfig {
    method: Option<SteadyMethod>,
    #[serde(default)]
    lambda: LambdaChoice,
    pv_cutoff_over_omega: Option<f64>,
    pv_rel_tol: Option<f64>,
    max_qubits: Option<usize>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasuresConfig {
    kinds: Option<Vec<String>>,
    #[serde(default)]
    symmetry: SymmetryChoice,
    #[serde(default)]
    spectrum: bool,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputConfig {
    path: Option<PathBuf>,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let g = cfg.geometry;
        let missing = |key: &str| Error::Config(format!("geometry.{key} is required for this geometry kind"));
        let geometry = match g.kind {
            GeometryKind::Polygon => Geometry {
                kind: g.kind,
                // a qubit-count sweep supplies the count itself
                qubits: g
                    .qubits
                    .or_else(|| match &cfg.sweep {
                        Some(a) if a.variable == SweepVariable::Qubits && a.start >= 0.0 => Some(a.start.ceil() as usize),
                        _ => None,
                    })
                    .ok_or_else(|| missing("qubits"))?,
                radius: g.radius_um.ok_or_else(|| missing("radius_um"))? * MICRON,
                height: g.height_um * MICRON,
                displacement: g.displacement_um * MICRON,
                d13: 0.0,
                l_over_d13: 0.0,
            },
            GeometryKind::TrianglePath => Geometry {
                kind: g.kind,
                qubits: g.qubits.unwrap_or(3),
                radius: 0.0,
                height: g.height_um * MICRON,
                displacement: 0.0,
                d13: g.d13_um.ok_or_else(|| missing("d13_um"))? * MICRON,
                l_over_d13: g.l_over_d13.unwrap_or(1.0),
            },
        };
        let permittivity = match cfg.slab.material {
            Material::Sapphire => PermittivityModel::sapphire(),
            Material::Vacuum => PermittivityModel::Vacuum,
            Material::DrudeLorentz => PermittivityModel::DrudeLorentz {
                eps_inf: cfg
                    .slab
                    .eps_inf
                    .ok_or_else(|| Error::Config("slab.eps_inf is required for drude-lorentz".into()))?,
                resonances: cfg.slab.resonances,
            },
        };
        let defaults = QuadratureSpec::default();
        let q = cfg.quadrature;
        let quadrature = QuadratureSpec {
            rel_tol: q.rel_tol.unwrap_or(defaults.rel_tol),
            abs_tol: q.abs_tol.unwrap_or(defaults.abs_tol),
            evanescent_cutoff: q.evanescent_cutoff.unwrap_or(defaults.evanescent_cutoff),
            angular: q.angular.unwrap_or(defaults.angular),
            max_panels: q.max_panels.unwrap_or(defaults.max_panels),
        };
        let pv_default = PvSpec::default();
        let measures = match cfg.measures.kinds {
            None => MeasureKind::ALL.to_vec(),
            Some(names) => names
                .iter()
                .map(|s| MeasureKind::parse(s).ok_or_else(|| Error::Config(format!("unknown measure '{s}'"))))
                .collect::<Result<_>>()?,
        };
        let e = cfg.emitters;
        let scenario = Scenario {
            geometry,
            dipole: e.dipole,
            dipole_moment: e.dipole_moment_debye * DEBYE,
            omega: e.transition_frequency_rad_s,
            slab: SlabSpec {
                thickness: cfg.slab.thickness_um * MICRON,
                permittivity,
                temperature: cfg.slab.temperature_k,
            },
            wall_temperature: cfg.environment.wall_temperature_k,
            quadrature,
            lambda: cfg.solver.lambda,
            pv: PvSpec {
                cutoff: cfg.solver.pv_cutoff_over_omega.unwrap_or(pv_default.cutoff),
                rel_tol: cfg.solver.pv_rel_tol.unwrap_or(pv_default.rel_tol),
            },
            method: cfg.solver.method,
            max_qubits: cfg.solver.max_qubits.unwrap_or(DEFAULT_MAX_QUBITS),
            measures,
            symmetry: cfg.measures.symmetry,
            spectrum: cfg.measures.spectrum,
            sweep: cfg.sweep,
            output: cfg.output.path,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Lints the scenario; every failure is a config error.
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        let as_config = |e: Error| if e.is_config() { Error::Config(e.to_string()) } else { e };
        let norm = self.dipole.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Config("dipole orientation must be a non-zero vector".into()));
        }
        if !(self.dipole_moment > 0.0) {
            return Err(Error::Config("dipole moment must be positive".into()));
        }
        if !(self.omega > 0.0) {
            return Err(Error::Config(format!("transition frequency must be positive, got {}", self.omega)));
        }
        if !(self.wall_temperature >= 0.0) {
            return Err(Error::Config(format!("wall temperature must be ≥ 0, got {}", self.wall_temperature)));
        }
        self.slab.validate().map_err(as_config)?;
        self.quadrature.validate().map_err(as_config)?;
        if self.lambda == LambdaChoice::PvQuadrature && !(self.pv.cutoff > 2.0) {
            return Err(Error::Config("pv_cutoff_over_omega must exceed 2".into()));
        }
        if self.measures.is_empty() {
            return Err(Error::Config("no measures selected".into()));
        }
        if let Some(axis) = &self.sweep {
            let values = axis.values().map_err(as_config)?;
            match (axis.variable, self.geometry.kind) {
                (SweepVariable::LOverD13, GeometryKind::Polygon) => {
                    return Err(Error::Config("l_over_d13 sweeps need the triangle-path geometry".into()))
                }
                (SweepVariable::RadiusUm | SweepVariable::XOverR | SweepVariable::Qubits, GeometryKind::TrianglePath) => {
                    return Err(Error::Config(format!("{} sweeps need the polygon geometry", axis.variable.name())))
                }
                _ => {}
            }
            for v in values {
                self.at(v)?.geometry.validate()?;
            }
        }
        let n = self.geometry.qubits;
        if n > self.max_qubits {
            return Err(Error::Config(format!("{n} qubits exceeds max_qubits = {}", self.max_qubits)));
        }
        Ok(())
    }

    /// The scenario with the sweep variable set to `value`.
    pub fn at(&self, value: f64) -> Result<Scenario> {
        let mut s = self.clone();
        let Some(axis) = &self.sweep else { return Ok(s) };
        match axis.variable {
            SweepVariable::LOverD13 => s.geometry.l_over_d13 = value,
            SweepVariable::RadiusUm => {
                // keep x/r fixed while the circle grows
                let ratio = self.geometry.displacement / self.geometry.radius;
                s.geometry.radius = value * MICRON;
                s.geometry.displacement = ratio * s.geometry.radius;
            }
            SweepVariable::XOverR => s.geometry.displacement = value * s.geometry.radius,
            SweepVariable::Qubits => {
                if value.fract() != 0.0 || value < 0.0 {
                    return Err(Error::Config(format!("qubit count must be a whole number, got {value}")));
                }
                s.geometry.qubits = value as usize;
            }
            SweepVariable::WallTemperatureK => s.wall_temperature = value,
        }
        s.sweep = None;
        Ok(s)
    }

    pub fn emitter_array(&self) -> EmitterArray {
        EmitterArray::identical(self.geometry.positions(), self.dipole, self.dipole_moment, self.omega)
    }

    pub fn symmetry(&self) -> Symmetry {
        match self.symmetry {
            SymmetryChoice::None => Symmetry::None,
            SymmetryChoice::Dihedral => Symmetry::Dihedral,
            SymmetryChoice::Mirror => Symmetry::Mirror,
            SymmetryChoice::Auto => match self.geometry.kind {
                GeometryKind::TrianglePath => Symmetry::Mirror,
                GeometryKind::Polygon if self.geometry.displacement == 0.0 => Symmetry::Dihedral,
                GeometryKind::Polygon => Symmetry::None,
            },
        }
    }
}

/// Outcome of one sweep point.
#[derive(Clone, Debug, PartialEq)]
pub struct PointResult {
    pub value: f64,
    pub measures: Vec<MeasureRow>,
    pub diagnostics: SteadyDiagnostics,
    pub spectrum: Option<Vec<SpectrumRow>>,
}

/// Runs the full pipeline for a scenario with no sweep axis (or for the
/// point `value` of its axis). Errors carry the sweep value.
pub fn run_point(scenario: &Scenario, value: f64, cache: &AlphaCache) -> Result<PointResult> {
    let point = scenario.at(value).map_err(|e| e.at_point(value))?;
    evaluate(&point, value, cache).map_err(|e| e.at_point(value))
}

fn evaluate(s: &Scenario, value: f64, cache: &AlphaCache) -> Result<PointResult> {
    s.geometry.validate()?;
    let n = s.geometry.qubits;
    let mut quad = s.quadrature;
    let mut opts = SteadyOptions { method: s.method, ..SteadyOptions::default() };
    if n >= RELAXED_FROM {
        log::info!("{n} qubits: using relaxed quadrature and steady-state tolerances");
        quad = quad.relaxed();
        opts = opts.relaxed();
    }
    let array = s.emitter_array();
    let alpha = alpha_matrices_with(&array, |delta, z| cache.pair_tensors(delta, z, s.omega, &s.slab, &quad))?;
    let g0: Vec<f64> = (0..n).map(|i| array.vacuum_rate(i)).collect();
    let strategy = match s.lambda {
        LambdaChoice::VacuumAnalytic => LambdaStrategy::VacuumAnalytic,
        LambdaChoice::PvQuadrature => LambdaStrategy::PvQuadrature(s.pv),
    };
    let lambda = build_lambda(&array, &s.slab, &strategy, &quad)?;
    let rates = build_rates(&alpha, s.omega, s.wall_temperature, s.slab.temperature, &g0)?.with_lambda(lambda);
    let l = build_liouvillian(&rates, s.omega, s.max_qubits)?;
    let ss = steady_state(&l, &opts)?;
    let symmetry = s.symmetry();
    let mut kinds = s.measures.clone();
    if symmetry == Symmetry::None && n > FULL_BIPARTITION_LIMIT && kinds.contains(&MeasureKind::BipartitionNegativity) {
        log::warn!("{n} qubits without a declared symmetry: skipping bipartition negativities");
        kinds.retain(|k| *k != MeasureKind::BipartitionNegativity);
    }
    let measures = measure_suite(&ss.rho, &kinds, symmetry)?;
    let spectrum = if s.spectrum {
        Some(spectrum_rows(&collective_spectrum(&rates, s.omega)?, &ss.rho))
    } else {
        None
    };
    Ok(PointResult { value, measures, diagnostics: ss.diagnostics, spectrum })
}


#[derive(Clone, Debug, PartialEq)]
pub enum PointOutcome {
    Done(PointResult),
    Failed { value: f64, message: String },
}

impl PointOutcome {
    pub fn value(&self) -> f64 {
        match self {
            PointOutcome::Done(p) => p.value,
            PointOutcome::Failed { value, .. } => *value,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub variable: String,
    /// In sweep order.
    pub points: Vec<PointOutcome>,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| matches!(p, PointOutcome::Failed { .. })).count()
    }
}

/// Evaluates every point of the sweep axis on `jobs` worker threads. Failed
/// points are recorded and the sweep continues; if every point fails the
/// first error is returned.
pub fn run_sweep(scenario: &Scenario, cache: &AlphaCache, jobs: usize) -> Result<SweepResult> {
    let axis = scenario
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("scenario has no [sweep] section".into()))?;
    let values = axis.values()?;
    let slots: Vec<Mutex<Option<Result<PointResult>>>> = values.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = jobs.clamp(1, values.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= values.len() {
                    break;
                }
                let r = run_point(scenario, values[k], cache);
                if let Err(e) = &r {
                    log::warn!("{e}");
                }
                *slots[k].lock().unwrap_or_else(|p| p.into_inner()) = Some(r);
            });
        }
    });
    let mut points = Vec::with_capacity(values.len());
    let mut first_error = None;
    for (slot, &value) in slots.into_iter().zip(&values) {
        let r = slot
            .into_inner()
            .unwrap_or_else(|p| p.into_inner())
            .unwrap_or_else(|| Err(Error::Solver("worker did not report".into()).at_point(value)));
        match r {
            Ok(p) => points.push(PointOutcome::Done(p)),
            Err(e) => {
                points.push(PointOutcome::Failed { value, message: e.root().to_string() });
                first_error.get_or_insert(e);
            }
        }
    }
    if let Some(e) = first_error {
        if points.iter().all(|p| matches!(p, PointOutcome::Failed { .. })) {
            return Err(e);
        }
    }
    Ok(SweepResult { variable: axis.variable.name().to_string(), points })
}

pub const CSV_HEADER: [&str; 11] = [
    "sweep_variable",
    "sweep_value",
    "measure",
    "index_set",
    "value",
    "method",
    "residual",
    "unknowns",
    "iterations",
    "min_eigenvalue",
    "status",
];

/// Twelve significant digits.
pub fn fmt_value(x: f64) -> String {
    format!("{x:.11e}")
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("csv: {other:?}")),
    }
}

/// One row per (point, measure); failed points get a single row whose
/// `status` column holds the error.
pub fn write_csv<W: Write>(result: &SweepResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for p in &result.points {
        match p {
            PointOutcome::Done(r) => {
                let d = &r.diagnostics;
                for m in &r.measures {
                    w.write_record([
                        result.variable.as_str(),
                        &fmt_value(r.value),
                        m.kind.name(),
                        &m.index_set,
                        &fmt_value(m.value),
                        d.method.name(),
                        &fmt_value(d.residual),
                        &d.unknowns.to_string(),
                        &d.iterations.to_string(),
                        &fmt_value(d.min_eigenvalue),
                        "ok",
                    ])
                    .map_err(csv_err)?;
                }
            }
            PointOutcome::Failed { value, message } => {
                w.write_record([result.variable.as_str(), &fmt_value(*value), "", "", "", "", "", "", "", "", message])
                    .map_err(csv_err)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(result, std::io::BufWriter::new(file))
}

/// Inverse of [`write_csv`].
pub fn read_csv<R: Read>(input: R) -> Result<SweepResult> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Config(format!("unexpected CSV header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Config(format!("bad number {s:?} in CSV")));
    let int = |s: &str| s.parse::<usize>().map_err(|_| Error::Config(format!("bad integer {s:?} in CSV")));
    let mut variable = String::new();
    let mut points: Vec<PointOutcome> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let f = |k: usize| rec.get(k).unwrap_or("");
        variable = f(0).to_string();
        let value = num(f(1))?;
        if f(10) != "ok" {
            points.push(PointOutcome::Failed { value, message: f(10).to_string() });
            continue;
        }
        let row = MeasureRow {
            kind: MeasureKind::parse(f(2)).ok_or_else(|| Error::Config(format!("unknown measure {:?}", f(2))))?,
            index_set: f(3).to_string(),
            value: num(f(4))?,
        };
        let diagnostics = SteadyDiagnostics {
            method: f(5).parse()?,
            residual: num(f(6))?,
            unknowns: int(f(7))?,
            iterations: int(f(8))?,
            min_eigenvalue: num(f(9))?,
        };
        match points.last_mut() {
            Some(PointOutcome::Done(p)) if p.value == value => p.measures.push(row),
            _ => points.push(PointOutcome::Done(PointResult {
                value,
                measures: vec![row],
                diagnostics,
                spectrum: None,
            })),
        }
    }
    Ok(SweepResult { variable, points })
}

pub const SPECTRUM_HEADER: [&str; 6] = [
    "sector",
    "index",
    "shifted_re_omega_rad_s",
    "im_omega_rad_s",
    "decay_constant_rad_s",
    "population",
];

/// Collective spectrum report; the real part is given relative to `n ω̃₀`.
pub fn write_spectrum_csv<W: Write>(rows: &[SpectrumRow], omega: f64, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SPECTRUM_HEADER).map_err(csv_err)?;
    for r in rows {
        let shifted = C64::new(r.omega.re - r.sector as f64 * omega, r.omega.im);
        w.write_record([
            r.sector.to_string(),
            r.index.to_string(),
            fmt_value(shifted.re),
            fmt_value(shifted.im),
            fmt_value(r.decay_constant),
            fmt_value(r.population),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const FIG2: &str = r#"
[geometry]
kind = "triangle-path"
height_um = 8.0
d13_um = 2.0
l_over_d13 = 1.0

[slab]
thickness_um = 0.01
temperature_K = 300.0
material = "sapphire"

[environment]
wall_temperature_K = 5.0

[sweep]
variable = "l_over_d13"
start = 0.5
stop = 1.0
points = 3
"#;

    #[test]
    fn parses_and_applies_sweep() {
        let s = Scenario::from_toml(FIG2).unwrap();
        assert_eq!(s.geometry.d13, 2e-6);
        assert_eq!(s.symmetry(), Symmetry::Mirror);
        assert_eq!(s.sweep.as_ref().unwrap().values().unwrap(), vec![0.5, 0.75, 1.0]);
        let p = s.at(0.5).unwrap();
        let pos = p.geometry.positions();
        assert!(pos[1][1].abs() < 1e-20);
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        let bad = FIG2.replace("height_um", "height");
        assert!(matches!(Scenario::from_toml(&bad), Err(Error::Config(_))));
        let bad = FIG2.replace("start = 0.5", "start = 1.5");
        assert!(Scenario::from_toml(&bad).unwrap_err().is_config());
    }

    #[test]
    fn log_spacing_hits_endpoints() {
        let axis = SweepAxis { variable: SweepVariable::RadiusUm, start: 0.1, stop: 100.0, points: Some(4), spacing: Spacing::Log };
        let v = axis.values().unwrap();
        assert_eq!(v.len(), 4);
        assert_eq!((v[0], v[3]), (0.1, 100.0));
        assert!((v[1] - 1.0).abs() < 1e-12 && (v[2] - 10.0).abs() < 1e-12);
    }
}
