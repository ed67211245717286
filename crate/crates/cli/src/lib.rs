//! Command-line driver: calibration, single-point link budgets, sweeps,
//! phase histograms, single-scenario optimization and QUBO export.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use risqkd::experiments::{
    calibrate, calibration_from_toml, calibration_to_toml, delta_metrics, evaluate_point, histogram_csv,
    phase_histogram, sweep_csv, sweep_elevation, write_atomic, CsvMeta, RunConfig, Scenario,
};
use risqkd::metrics::{Calibration, Metrics};
use risqkd::qubo::{build_qubo, write_qubo};
use risqkd::solvers::{optimize_secure, SolverKind};
use risqkd::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CALIBRATION: i32 = 3;
pub const EXIT_INFEASIBLE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "risqkd", version, about = "Dual-band RIS-assisted satellite QKD link simulator")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML run configuration; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Calibration TOML written by `calibrate`; skips refitting.
    #[arg(long, global = true)]
    calibration: Option<PathBuf>,
    /// Overrides the master seed from the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Leaves the generation time out of CSV headers.
    #[arg(long, global = true)]
    no_timestamp: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Metrics of one link, optimized when the surface is non-empty.
    LinkBudget {
        #[arg(long)]
        elevation: f64,
        #[arg(long, default_value_t = 0)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// Fits the calibration constants and prints them as TOML.
    Calibrate {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Elevation sweep over all configured surface sizes.
    Sweep {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Joint phase-level histograms per attenuation level.
    Histogram {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimizes one scenario and prints the bit vector and its metrics.
    Optimize {
        #[arg(long)]
        elevation: f64,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_parser = parse_solver)]
        solver: Option<SolverKind>,
        /// Writes the best-so-far trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Writes the QUBO of one scenario, expanded about the all-zero vector.
    QuboExport {
        #[arg(long, default_value_t = 45.0)]
        elevation: f64,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_solver(s: &str) -> Result<SolverKind, String> {
    match s {
        "brute" => Ok(SolverKind::Brute),
        "anneal" => Ok(SolverKind::Anneal),
        "tabu" => Ok(SolverKind::Tabu),
        "bcd" => Ok(SolverKind::Bcd),
        other => Err(format!("unknown solver '{other}' (brute, anneal, tabu, bcd)")),
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Parse { .. } | Error::Domain(_) | Error::Structural(_) => EXIT_CONFIG,
        Error::Calibration(_) => EXIT_CALIBRATION,
        Error::Infeasible { .. } => EXIT_INFEASIBLE,
        Error::Io(_) => EXIT_FAILURE,
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status. Normal output goes to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match execute(cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

/// [`run`] on the process arguments and standard streams.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(args, &mut stdout.lock(), &mut stderr.lock())
}

fn load_config(common: &Common) -> Result<RunConfig, Error> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::from_path(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn load_calibration(common: &Common, cfg: &RunConfig) -> Result<Calibration, Error> {
    match &common.calibration {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            calibration_from_toml(&text)
        }
        None => calibrate(cfg),
    }
}

fn output_path(cfg: &RunConfig, explicit: Option<PathBuf>, name: &str) -> PathBuf {
    explicit.unwrap_or_else(|| cfg.output_dir.join(name))
}

fn print_metrics(out: &mut dyn Write, m: &Metrics) -> std::io::Result<()> {
    writeln!(out, "snr_db = {}", m.snr_db())?;
    writeln!(out, "ber = {:e}", m.ber)?;
    writeln!(out, "qber = {}", m.qber)?;
    writeln!(out, "skr_bits_s = {}", m.skr_bits_s)?;
    writeln!(out, "cost = {}", m.cost)
}

fn bit_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn written(out: &mut dyn Write, path: &Path) -> Result<(), Error> {
    writeln!(out, "wrote {}", path.display())?;
    Ok(())
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), Error> {
    let mut cfg = load_config(&cli.common)?;
    let timestamp = !cli.common.no_timestamp;
    match cli.command {
        Command::Calibrate { out: path } => {
            let cal = calibrate(&cfg)?;
            let text = calibration_to_toml(&cal)?;
            write!(out, "{text}")?;
            if let Some(path) = path {
                write_atomic(&path, text.as_bytes())?;
            }
        }
        Command::LinkBudget { elevation, n, trial } => {
            let cal = load_calibration(&cli.common, &cfg)?;
            let row = evaluate_point(&cfg, &cal, elevation, n, trial)?;
            writeln!(out, "elevation_deg = {elevation}")?;
            writeln!(out, "n_elements = {n}")?;
            writeln!(out, "snr_db = {}", row.snr_db)?;
            writeln!(out, "ber = {:e}", row.ber)?;
            writeln!(out, "qber = {}", row.qber)?;
            writeln!(out, "skr_bits_s = {}", row.skr_bits_s)?;
            writeln!(out, "cost = {}", row.cost)?;
            writeln!(out, "feasible = {}", row.feasible)?;
        }
        Command::Sweep { out: path } => {
            let cal = load_calibration(&cli.common, &cfg)?;
            let rows = sweep_elevation(&cfg, &cal)?;
            let deltas = delta_metrics(&rows)?;
            let meta = CsvMeta { kind: "sweep", seed: cfg.seed, solver: &cfg.solver, calibration: &cal, timestamp };
            let path = output_path(&cfg, path, "sweep.csv");
            write_atomic(&path, sweep_csv(&rows, &deltas, &meta)?.as_bytes())?;
            written(out, &path)?;
        }
        Command::Histogram { out: path } => {
            let cal = load_calibration(&cli.common, &cfg)?;
            let grids = phase_histogram(&cfg, &cal, &cfg.sweep.attenuation_levels)?;
            let meta =
                CsvMeta { kind: "histogram", seed: cfg.seed, solver: &cfg.solver, calibration: &cal, timestamp };
            let path = output_path(&cfg, path, "histogram.csv");
            write_atomic(&path, histogram_csv(&grids, &meta).as_bytes())?;
            written(out, &path)?;
        }
        Command::Optimize { elevation, n, solver, trace } => {
            if let Some(kind) = solver {
                cfg.solver.kind = kind;
            }
            let cal = load_calibration(&cli.common, &cfg)?;
            let n = n.unwrap_or(cfg.ris.n_elements);
            let scenario = Scenario::build(&cfg, &cal, elevation, n, 0, 1.0)?;
            let solver = cfg.solver.with_seed(scenario.solver_seed(&cfg));
            let best = optimize_secure(&scenario.objective, &solver)?;
            writeln!(out, "solver = {}", solver.kind.name())?;
            writeln!(out, "x = {}", bit_string(&best.best_bits))?;
            writeln!(out, "evaluations = {}", best.evaluations)?;
            print_metrics(out, &scenario.objective.metrics(&best.best_bits)?)?;
            if let Some(path) = trace {
                write_atomic(&path, best.trace_csv().as_bytes())?;
                written(out, &path)?;
            }
        }
        Command::QuboExport { elevation, n, out: path } => {
            let cal = load_calibration(&cli.common, &cfg)?;
            let n = n.unwrap_or(cfg.ris.n_elements);
            let scenario = Scenario::build(&cfg, &cal, elevation, n, 0, 1.0)?;
            let objective = &scenario.objective;
            let model = build_qubo(objective, &vec![false; objective.layout().dim()])?;
            let comments = vec![
                format!("risqkd qubo version={}", env!("CARGO_PKG_VERSION")),
                format!("seed={} elevation_deg={elevation} n_elements={n}", cfg.seed),
                "minimize x^T J x + c^T x + offset over x in {0,1}^dim".to_string(),
            ];
            let mut buf = Vec::new();
            write_qubo(&model, &mut buf, &comments)?;
            write_atomic(&path, &buf)?;
            written(out, &path)?;
        }
    }
    Ok(())
}
