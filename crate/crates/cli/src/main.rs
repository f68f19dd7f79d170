//! `qudaqc` command line: verify, compile, sweep, simulate.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qudaqc::config::{RunConfig, ThetaGrid};
use qudaqc::hamiltonian::{blbq_problem, zz_source};
use qudaqc::phase_matrix::{all_coupling_rows, verify_determinant, verify_eigenvalues, verify_properties, verify_row_sums, PropertyReport, WordSet};
use qudaqc::schedule::{compile, CompileOptions, Pruning, Schedule};
use qudaqc::sim::run::{ideal_evolution, run_bdaqc, run_digital, run_sdaqc};
use qudaqc::sim::state::{ghz_state, state_fidelity};
use qudaqc::sim::sweep::{sweep, to_csv, SweepRow};
use qudaqc::sim::NoiseModel;
use qudaqc::{DaqcError, QuditHamiltonian};

#[derive(Parser)]
#[command(name = "qudaqc", version, about = "Digital-analog compilation and simulation for qudit Hamiltonians")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the algebraic properties of the phase matrix.
    Verify(VerifyArgs),
    /// Compile a problem Hamiltonian into a schedule file.
    Compile(CompileArgs),
    /// Run the BLBQ θ sweep and write the result table.
    Sweep(SweepArgs),
    /// Execute a schedule and report its fidelity.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct VerifyArgs {
    /// Local dimensions, comma separated.
    #[arg(long = "d", value_delimiter = ',', default_value = "2,3,4,5", value_parser = clap::value_parser!(u32).range(2..=5))]
    dims: Vec<u32>,
    /// Only run checks whose name starts with this (e.g. S3, eig, det, row_sum).
    #[arg(long)]
    property: Option<String>,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Default)]
struct ConfigArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long = "T")]
    total_time: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    /// Number of evenly spaced angles over [0, π].
    #[arg(long)]
    points: Option<usize>,
    #[arg(long = "t1-over-T")]
    t1_over_t: Option<f64>,
    #[arg(long = "delta-t-over-T")]
    delta_t_over_t: Option<f64>,
    #[arg(long)]
    single_gate_fidelity: Option<f64>,
    #[arg(long)]
    two_gate_fidelity: Option<f64>,
    #[arg(long)]
    pruning_factor: Option<f64>,
    /// auto, full or x_powers.
    #[arg(long)]
    word_set: Option<WordSet>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct CompileArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Source Hamiltonian JSON; defaults to the S_z S_z chain.
    #[arg(long)]
    source: Option<PathBuf>,
    /// Problem Hamiltonian JSON; defaults to the built-in BLBQ chain at --theta.
    #[arg(long)]
    problem: Option<PathBuf>,
    /// Keep every block regardless of duration.
    #[arg(long)]
    no_prune: bool,
    /// Schedule output path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Result table output path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write every compiled schedule into this directory.
    #[arg(long)]
    dump_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Sdaqc,
    Bdaqc,
    Digital,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Schedule JSON (not needed for the digital baseline).
    #[arg(long)]
    schedule: Option<PathBuf>,
    #[arg(long)]
    source: Option<PathBuf>,
    /// Reference problem; defaults to BLBQ at the schedule's θ.
    #[arg(long)]
    problem: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "bdaqc")]
    mode: Mode,
    /// Ignore all noise parameters.
    #[arg(long)]
    noiseless: bool,
}

/// Failure with its exit code: 1 internal, 2 usage, 3 infeasible.
struct Failure {
    code: u8,
    message: String,
}

impl From<DaqcError> for Failure {
    fn from(e: DaqcError) -> Self {
        let code = match e {
            DaqcError::Infeasible { .. } | DaqcError::Incompatible(_) | DaqcError::MissingSourceTerm(_) => 3,
            DaqcError::InvalidInput(_) | DaqcError::InvalidDimension(_) | DaqcError::Json(_) | DaqcError::SizeCap { .. } => 2,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

fn io_error(path: &Path, e: std::io::Error) -> Failure {
    Failure { code: 1, message: format!("{}: {e}", path.display()) }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure { code: 2, message: format!("{}: {e}", path.display()) })
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    fs::write(path, text).map_err(|e| io_error(path, e))
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig, Failure> {
        let mut c = match &self.config {
            Some(p) => RunConfig::from_json(&read(p)?)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.n {
            c.n = v;
        }
        if let Some(v) = self.total_time {
            c.total_time = v;
        }
        if let Some(v) = self.theta {
            c.theta = Some(v);
            c.theta_grid = None;
        }
        if let Some(v) = self.points {
            c.theta_grid = Some(ThetaGrid::Points(v));
        }
        if let Some(v) = self.t1_over_t {
            c.t1_over_t = v;
        }
        if let Some(v) = self.delta_t_over_t {
            c.delta_t_over_t = v;
        }
        if let Some(v) = self.single_gate_fidelity {
            c.single_gate_fidelity = v;
        }
        if let Some(v) = self.two_gate_fidelity {
            c.two_gate_fidelity = v;
        }
        if let Some(v) = self.pruning_factor {
            c.pruning_factor = v;
        }
        if let Some(v) = &self.word_set {
            c.word_set = v.clone();
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        c.validate()?;
        Ok(c)
    }
}

fn load_hamiltonian(path: &Path) -> Result<QuditHamiltonian, Failure> {
    Ok(QuditHamiltonian::from_json(&read(path)?)?)
}

fn source_for(path: &Option<PathBuf>, cfg: &RunConfig) -> Result<QuditHamiltonian, Failure> {
    match path {
        Some(p) => load_hamiltonian(p),
        None => Ok(zz_source(cfg.n, cfg.d)?),
    }
}

fn cmd_verify(args: &VerifyArgs) -> Result<(), Failure> {
    let mut report = PropertyReport::default();
    for &d in &args.dims {
        let d = d as usize;
        report.extend(verify_properties(d)?);
        if d <= 4 {
            report.extend(verify_eigenvalues(d)?);
        }
        for n in [2, 3] {
            report.extend(verify_row_sums(d, n, &all_coupling_rows(d, n))?);
        }
        if d <= 3 {
            report.extend(verify_determinant(d)?);
        }
    }
    if let Some(p) = &args.property {
        report = report.filtered(p);
        if report.checks.is_empty() {
            return Err(usage(format!("no check matches property '{p}'")));
        }
    }
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    for c in report.checks.iter().filter(|c| !c.passed || !c.property.starts_with("row_sum")) {
        println!("{} d={} {} residual={:.3e} tol={:.0e}", if c.passed { "PASS" } else { "FAIL" }, c.d, c.property, c.residual, c.tolerance);
    }
    println!("{} checks, {} failed", report.checks.len(), failed);
    if let Some(out) = &args.out {
        write(out, &serde_json::to_string_pretty(&report).map_err(DaqcError::from)?)?;
    }
    if failed > 0 {
        return Err(Failure { code: 1, message: format!("{failed} checks failed") });
    }
    Ok(())
}

fn cmd_compile(args: &CompileArgs) -> Result<(), Failure> {
    let cfg = args.cfg.resolve()?;
    let source = source_for(&args.source, &cfg)?;
    let theta = cfg.theta.or_else(|| cfg.thetas().first().copied()).unwrap_or(0.0);
    let (problem, theta_meta) = match &args.problem {
        Some(p) => (load_hamiltonian(p)?, cfg.theta),
        None => (blbq_problem(cfg.n, theta)?, Some(theta)),
    };
    let pruning = (!args.no_prune && cfg.pruning_factor > 0.0).then(|| Pruning { delta_t: cfg.delta_t(), factor: cfg.pruning_factor });
    let options = CompileOptions { word_set: cfg.word_set.clone(), pruning, theta: theta_meta, ..Default::default() };
    let schedule = compile(&source, &problem, cfg.total_time, &options)?;
    let summary = format!(
        "residual {:.3e}, blocks {}, gates {}, analog time {:.6}",
        schedule.metadata.residual,
        schedule.block_count(),
        schedule.gate_count(),
        schedule.total_analog_time()
    );
    let json = schedule.to_json()?;
    match args.out.as_ref().or(cfg.schedule_out.as_ref().map(PathBuf::from).as_ref()) {
        Some(path) => {
            write(path, &json)?;
            println!("{summary}");
        }
        None => {
            println!("{json}");
            eprintln!("{summary}");
        }
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), Failure> {
    let cfg = args.cfg.resolve()?;
    if cfg.d != 3 {
        return Err(usage(format!("the BLBQ sweep is defined for qutrits, config has d = {}", cfg.d)));
    }
    let thetas = cfg.thetas();
    let points = sweep(&thetas, &cfg.sweep_options())?;
    let rows: Vec<SweepRow> = points.iter().map(|p| p.row.clone()).collect();
    let table = to_csv(&rows);
    let dump = args.dump_dir.clone().or(cfg.schedule_dump_dir.as_ref().map(PathBuf::from));
    if let Some(dir) = dump {
        for (k, p) in points.iter().enumerate() {
            write(&dir.join(format!("schedule_{k:03}.json")), &p.schedule.to_json()?)?;
        }
    }
    match args.out.clone().or(cfg.results_out.as_ref().map(PathBuf::from)) {
        Some(path) => {
            write(&path, &table)?;
            eprintln!("{} points written to {}", rows.len(), path.display());
        }
        None => print!("{table}"),
    }
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let cfg = args.cfg.resolve()?;
    let noise = if args.noiseless { NoiseModel::noiseless(cfg.delta_t()) } else { cfg.noise() };
    let schedule = match &args.schedule {
        Some(p) => Some(Schedule::from_json(&read(p)?)?),
        None => None,
    };
    let n = schedule.as_ref().map_or(cfg.n, |s| s.n);
    let theta = cfg.theta.or(schedule.as_ref().and_then(|s| s.metadata.theta)).unwrap_or(0.0);
    let total_time = schedule.as_ref().map_or(cfg.total_time, |s| s.total_time);
    let problem = match &args.problem {
        Some(p) => load_hamiltonian(p)?,
        None => blbq_problem(n, theta)?,
    };
    let d = problem.d();
    let ghz = ghz_state(d, n)?;
    let ideal = ideal_evolution(&problem, total_time, &ghz)?;
    let out = match args.mode {
        Mode::Digital => run_digital(n, theta, total_time, &noise, &ghz)?,
        Mode::Sdaqc | Mode::Bdaqc => {
            let schedule = schedule.as_ref().ok_or_else(|| usage("--schedule is required for sdaqc and bdaqc"))?;
            let source = match &args.source {
                Some(p) => load_hamiltonian(p)?,
                None => zz_source(schedule.n, schedule.d)?,
            };
            match args.mode {
                Mode::Sdaqc => run_sdaqc(schedule, &source, (!args.noiseless).then_some(&noise), &ghz)?,
                _ => run_bdaqc(schedule, &source, &noise, &ghz)?,
            }
        }
    };
    let report = serde_json::json!({
        "mode": match args.mode { Mode::Sdaqc => "sdaqc", Mode::Bdaqc => "bdaqc", Mode::Digital => "digital" },
        "theta": theta,
        "n": n,
        "fidelity": state_fidelity(&out, &ideal)?,
        "trace": out.trace(),
    });
    println!("{report}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Verify(a) => cmd_verify(a),
        Command::Compile(a) => cmd_compile(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Simulate(a) => cmd_simulate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
