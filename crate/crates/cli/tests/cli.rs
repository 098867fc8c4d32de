use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_slabsteady");

const PAIR: &str = r#"
[geometry]
kind = "polygon"
qubits = 2
radius_um = 1.0
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

[measures]
kinds = ["pair-negativity", "concurrence"]
"#;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).env("RUST_LOG", "warn").args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn run_writes_one_row_per_measure() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("pair.toml"), PAIR).unwrap();
    let o = run(dir.path(), &["run", "--config", "pair.toml", "--out", "out.csv", "--cache", "alpha.cache"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("sweep_variable,sweep_value,measure"));
    assert!(lines[1].contains("pair-negativity,1-2"));
    assert!(lines[2].contains("concurrence,1-2"));
    assert!(dir.path().join("alpha.cache").exists());

    // second run with a warm cache and a different solver: same numbers
    let o = run(dir.path(), &["run", "--config", "pair.toml", "--cache", "alpha.cache", "--method", "blocked-linear"]);
    assert_eq!(code(&o), 0);
    let stdout = String::from_utf8(o.stdout).unwrap();
    let value = |line: &str| line.split(',').nth(4).unwrap().parse::<f64>().unwrap();
    let a = value(lines[1]);
    let b = value(stdout.lines().nth(1).unwrap());
    assert!((a - b).abs() < 1e-8 * a.max(1e-12), "{a} vs {b}");
}

#[test]
fn spectrum_lists_every_collective_state() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("pair.toml"), PAIR).unwrap();
    let o = run(dir.path(), &["spectrum", "--config", "pair.toml"]);
    assert_eq!(code(&o), 0);
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.starts_with("sector,index,shifted_re_omega_rad_s"));
    assert_eq!(out.lines().count(), 1 + 4);
    let total: f64 = out.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn config_problems_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), &["validate", "--config", "missing.toml"])), 1);
    std::fs::write(dir.path().join("typo.toml"), PAIR.replace("radius_um", "raduis_um")).unwrap();
    let o = run(dir.path(), &["validate", "--config", "typo.toml"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("raduis_um"));
    std::fs::write(dir.path().join("pair.toml"), PAIR).unwrap();
    assert_eq!(code(&run(dir.path(), &["validate", "--config", "pair.toml"])), 0);
    assert_eq!(code(&run(dir.path(), &["run", "--config", "pair.toml", "--method", "magic"])), 1);
    assert_eq!(code(&run(dir.path(), &["run", "--config", "pair.toml", "--jobs", "0"])), 1);
}

#[test]
fn numerical_failures_exit_with_two() {
    // six qubits are past the dense solver's size limit
    let dir = tempfile::tempdir().unwrap();
    let text = PAIR.replace("qubits = 2", "qubits = 6") + "\n[solver]\nmethod = \"dense-nullspace\"\n";
    std::fs::write(dir.path().join("big.toml"), text).unwrap();
    let o = run(dir.path(), &["run", "--config", "big.toml"]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn partial_sweeps_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let text = PAIR.replace("qubits = 2\n", "")
        + "\n[solver]\nmethod = \"dense-nullspace\"\n[sweep]\nvariable = \"qubits\"\nstart = 5\nstop = 6\n";
    std::fs::write(dir.path().join("sweep.toml"), text).unwrap();
    let o = run(dir.path(), &["sweep", "--config", "sweep.toml", "--out", "sweep.csv", "--jobs", "2"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let last = csv.lines().last().unwrap();
    assert!(last.starts_with("qubits,6.") && last.contains("exceeds"), "{last}");
}

#[test]
fn sweeps_are_reproducible_across_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let text = PAIR.to_string() + "\n[sweep]\nvariable = \"wall_temperature_K\"\nstart = 0.0\nstop = 300.0\npoints = 4\n";
    std::fs::write(dir.path().join("t.toml"), text).unwrap();
    let a = run(dir.path(), &["sweep", "--config", "t.toml", "--jobs", "1"]);
    let b = run(dir.path(), &["sweep", "--config", "t.toml", "--jobs", "4"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(String::from_utf8(a.stdout).unwrap().lines().count(), 1 + 4 * 2);
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let o = run(&dir, &["validate", "--config", path.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}: {}", path.display(), String::from_utf8_lossy(&o.stderr));
    }
}
