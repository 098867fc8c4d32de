use slabsteady::cache::AlphaCache;
use slabsteady::entanglement::MeasureKind;
use slabsteady::scenario::{
    polygon_positions, read_csv, run_point, run_sweep, triangle_path_positions, write_csv, PointOutcome, Scenario,
};
use slabsteady::Error;

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn base(geometry: &str, rest: &str) -> String {
    format!(
        r#"
[geometry]
{geometry}
height_um = 8.0

[slab]
thickness_um = 0.01
temperature_K = 300.0
material = "sapphire"

[environment]
wall_temperature_K = 5.0

[quadrature]
rel_tol = 1e-9
abs_tol = 1e-11
{rest}
"#
    )
}

#[test]
fn polygon_and_triangle_geometry() {
    let r = 2.0;
    let sq = polygon_positions(4, r, 1.0, 0.0);
    assert!((dist(sq[0], sq[1]) - 2f64.sqrt() * r).abs() < 1e-12);
    assert!((dist(sq[0], sq[2]) - 2.0 * r).abs() < 1e-12);
    let hex = polygon_positions(6, r, 1.0, 0.0);
    for q in 0..6 {
        assert!((dist(hex[q], hex[(q + 1) % 6]) - r).abs() < 1e-12);
    }
    let pushed = polygon_positions(6, r, 1.0, 0.5);
    assert!((dist(pushed[5], [0.0, 0.0, 1.0]) - 2.5).abs() < 1e-12);
    assert_eq!(&pushed[..5], &hex[..5]);
    let eq = triangle_path_positions(3.0, 1.0, 1.0);
    for (a, b) in [(0, 1), (1, 2), (0, 2)] {
        assert!((dist(eq[a], eq[b]) - 3.0).abs() < 1e-12);
    }
    let flat = triangle_path_positions(3.0, 0.5, 1.0);
    assert_eq!(flat[1], [0.0, 0.0, 1.0]);
}

#[test]
fn config_errors_are_reported_as_such() {
    let bad = base("kind = \"polygon\"\nqubits = 1\nradius_um = 1.0", "");
    assert!(Scenario::from_toml(&bad).unwrap_err().is_config());
    let reversed = base(
        "kind = \"polygon\"\nqubits = 3\nradius_um = 1.0",
        "[sweep]\nvariable = \"radius_um\"\nstart = 2.0\nstop = 1.0\npoints = 3",
    );
    let e = match Scenario::from_toml(&reversed) {
        Err(e) => e,
        Ok(s) => run_sweep(&s, &AlphaCache::new(), 1).unwrap_err(),
    };
    assert!(e.is_config(), "{e}");
}

#[test]
fn equilibrium_gives_no_entanglement() {
    let text = base("kind = \"polygon\"\nqubits = 3\nradius_um = 1.0", "")
        .replace("wall_temperature_K = 5.0", "wall_temperature_K = 300.0");
    let s = Scenario::from_toml(&text).unwrap();
    let r = run_point(&s, 0.0, &AlphaCache::new()).unwrap();
    assert!(!r.measures.is_empty());
    for m in &r.measures {
        assert!(m.value < 1e-9, "{} {} = {:e}", m.kind, m.index_set, m.value);
    }
}

#[test]
fn warm_cache_reproduces_cold_results_and_survives_a_file_round_trip() {
    let text = base(
        "kind = \"triangle-path\"\nd13_um = 2.0",
        "[sweep]\nvariable = \"l_over_d13\"\nstart = 0.6\nstop = 1.0\npoints = 3",
    );
    let s = Scenario::from_toml(&text).unwrap();
    let cold = AlphaCache::new();
    let a = run_sweep(&s, &cold, 2).unwrap();
    assert!(!cold.is_empty());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("alpha.cache");
    cold.save(&path).unwrap();
    let warm = AlphaCache::load(&path).unwrap();
    assert_eq!(warm.len(), cold.len());
    let b = run_sweep(&s, &warm, 1).unwrap();
    assert_eq!(warm.len(), cold.len(), "warm run computed new tensors");
    for (p, q) in a.points.iter().zip(&b.points) {
        let (PointOutcome::Done(p), PointOutcome::Done(q)) = (p, q) else { panic!("point failed") };
        for (x, y) in p.measures.iter().zip(&q.measures) {
            assert_eq!(x.index_set, y.index_set);
            assert!((x.value - y.value).abs() <= 1e-12 * x.value.abs().max(1e-12));
        }
    }
    assert!(AlphaCache::load(&dir.path().join("missing")).unwrap().is_empty());
}

#[test]
fn csv_output_is_deterministic_and_round_trips() {
    let text = base(
        "kind = \"polygon\"\nqubits = 4\nradius_um = 1.0",
        "[measures]\nkinds = [\"pair-negativity\", \"concurrence\", \"bipartition-negativity\"]\n\
         [sweep]\nvariable = \"radius_um\"\nstart = 0.5\nstop = 2.0\npoints = 4\nspacing = \"log\"",
    );
    let s = Scenario::from_toml(&text).unwrap();
    let csv = |jobs: usize| {
        let r = run_sweep(&s, &AlphaCache::new(), jobs).unwrap();
        let mut buf = Vec::new();
        write_csv(&r, &mut buf).unwrap();
        buf
    };
    let one = csv(1);
    assert_eq!(one, csv(3));
    let parsed = read_csv(one.as_slice()).unwrap();
    assert_eq!(parsed.variable, "radius_um");
    assert_eq!(parsed.points.len(), 4);
    let mut again = Vec::new();
    write_csv(&parsed, &mut again).unwrap();
    assert_eq!(one, again);
    let PointOutcome::Done(p) = &parsed.points[0] else { panic!() };
    assert!(p.measures.iter().any(|m| m.kind == MeasureKind::Concurrence));
}

#[test]
fn sweeps_keep_going_past_failed_points() {
    let text = base(
        "kind = \"polygon\"\nradius_um = 1.0",
        "[solver]\nmethod = \"dense-nullspace\"\n[measures]\nkinds = [\"pair-negativity\"]\n\
         [sweep]\nvariable = \"qubits\"\nstart = 4\nstop = 6",
    );
    let s = Scenario::from_toml(&text).unwrap();
    let r = run_sweep(&s, &AlphaCache::new(), 2).unwrap();
    assert_eq!(r.points.len(), 3);
    assert_eq!(r.failures(), 1);
    let PointOutcome::Failed { value, message } = &r.points[2] else { panic!("N = 6 should fail") };
    assert_eq!(*value, 6.0);
    assert!(message.contains("exceeds"), "{message}");
    let mut buf = Vec::new();
    write_csv(&r, &mut buf).unwrap();
    let back = read_csv(buf.as_slice()).unwrap();
    assert_eq!(back.failures(), 1);

    // when every point fails the error itself comes back
    let all_bad = text.replace("start = 4", "start = 6").replace("stop = 6", "stop = 7");
    let e = run_sweep(&Scenario::from_toml(&all_bad).unwrap(), &AlphaCache::new(), 2).unwrap_err();
    assert!(matches!(e.root(), Error::Resource { .. }), "{e}");
}

#[test]
fn close_pair_has_negativity_and_concurrence_of_the_expected_order() {
    let text = base(
        "kind = \"polygon\"\nqubits = 2\nradius_um = 0.5",
        "[measures]\nkinds = [\"pair-negativity\", \"concurrence\"]",
    );
    let r = run_point(&Scenario::from_toml(&text).unwrap(), 0.0, &AlphaCache::new()).unwrap();
    let n = r.measures.iter().find(|m| m.kind == MeasureKind::PairNegativity).unwrap().value;
    let c = r.measures.iter().find(|m| m.kind == MeasureKind::Concurrence).unwrap().value;
    assert!((0.005..0.5).contains(&n), "N = {n}");
    assert!((0.025..1.0).contains(&c), "C = {c}");
}
