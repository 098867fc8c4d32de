use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use slabsteady::cache::AlphaCache;
use slabsteady::scenario::{run_point, run_sweep, write_csv, write_spectrum_csv, PointOutcome, Scenario, SweepResult};
use slabsteady::steady::SteadyMethod;
use slabsteady::Error;

/// Steady-state entanglement of emitter arrays near a slab held out of
/// thermal equilibrium with its surroundings.
#[derive(Parser)]
#[command(name = "slabsteady", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a single point (the sweep start if the config has a sweep).
    Run(Common),
    /// Evaluate every point of the configured sweep axis.
    Sweep(Common),
    /// Collective eigenvalues, decay constants and populations at one point.
    Spectrum(Common),
    /// Parse and check a config without solving anything.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// CSV destination; defaults to `[output] path`, then stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// α kernel cache file, read before and written after the run.
    #[arg(long)]
    cache: Option<PathBuf>,
    /// dense-nullspace, blocked-linear or long-time.
    #[arg(long)]
    method: Option<String>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

const EXIT_CONFIG: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    if e.is_config() || matches!(e.root(), Error::Io(_)) {
        EXIT_CONFIG
    } else {
        EXIT_NUMERICAL
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn dispatch(cmd: Command) -> Result<u8, Error> {
    match cmd {
        Command::Validate { config } => validate(&config),
        Command::Run(c) => with_cache(&c, |s, cache| {
            let value = first_value(s)?;
            let p = run_point(s, value, cache)?;
            let result = SweepResult { variable: variable_name(s), points: vec![PointOutcome::Done(p)] };
            write_output(&c, s, |w| write_csv(&result, w))?;
            Ok(0)
        }),
        Command::Sweep(c) => with_cache(&c, |s, cache| {
            let result = run_sweep(s, cache, c.jobs)?;
            write_output(&c, s, |w| write_csv(&result, w))?;
            let failed = result.failures();
            if failed > 0 {
                warn!("{failed} of {} points failed", result.points.len());
                return Ok(EXIT_PARTIAL);
            }
            Ok(0)
        }),
        Command::Spectrum(c) => with_cache(&c, |s, cache| {
            let mut s = s.clone();
            s.spectrum = true;
            let value = first_value(&s)?;
            let p = run_point(&s, value, cache)?;
            let rows = p.spectrum.unwrap_or_default();
            write_output(&c, &s, |w| write_spectrum_csv(&rows, s.omega, w))?;
            Ok(0)
        }),
    }
}

fn load(config: &Path) -> Result<Scenario, Error> {
    let text = std::fs::read_to_string(config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", config.display())))?;
    Scenario::from_toml(&text)
}

fn validate(config: &Path) -> Result<u8, Error> {
    let s = load(config)?;
    s.geometry.validate()?;
    let points = match &s.sweep {
        Some(axis) => {
            let values = axis.values()?;
            for &v in &values {
                s.at(v)?.geometry.validate()?;
            }
            values.len()
        }
        None => 1,
    };
    println!(
        "ok: {:?} geometry, {} qubits, {} point(s), measures {:?}",
        s.geometry.kind,
        s.geometry.qubits,
        points,
        s.measures.iter().map(|m| m.name()).collect::<Vec<_>>()
    );
    Ok(0)
}

fn with_cache<F>(c: &Common, body: F) -> Result<u8, Error>
where
    F: FnOnce(&Scenario, &AlphaCache) -> Result<u8, Error>,
{
    let mut s = load(&c.config)?;
    if let Some(m) = &c.method {
        s.method = Some(m.parse::<SteadyMethod>()?);
    }
    if c.jobs == 0 {
        return Err(Error::Config("--jobs must be at least 1".into()));
    }
    let cache = match &c.cache {
        Some(p) => {
            let cache = AlphaCache::load(p)?;
            info!("loaded {} cached α tensors from {}", cache.len(), p.display());
            cache
        }
        None => AlphaCache::new(),
    };
    let outcome = body(&s, &cache);
    // keep whatever was computed, even when the run itself failed
    if let Some(p) = &c.cache {
        cache.save(p)?;
    }
    outcome
}

fn first_value(s: &Scenario) -> Result<f64, Error> {
    match &s.sweep {
        Some(axis) => {
            let v = axis.values()?[0];
            info!("config has a sweep; solving at {} = {v}", axis.variable.name());
            Ok(v)
        }
        None => Ok(0.0),
    }
}

fn variable_name(s: &Scenario) -> String {
    s.sweep.as_ref().map_or("none", |a| a.variable.name()).to_string()
}

fn write_output<F>(c: &Common, s: &Scenario, emit: F) -> Result<(), Error>
where
    F: FnOnce(&mut dyn Write) -> Result<(), Error>,
{
    match c.out.as_ref().or(s.output.as_ref()) {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            emit(&mut w)?;
            w.flush()?;
            info!("wrote {}", path.display());
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            emit(&mut lock)?;
        }
    }
    Ok(())
}
