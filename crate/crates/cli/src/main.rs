//! `qsd`: solve, certify, export and simulate minimum-error discrimination
//! problems.
//!
//! JSON goes to stdout and diagnostics to stderr. Exit codes: 0 success,
//! 1 invalid input, 2 numeric non-convergence.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, warn, LevelFilter};
use serde::Serialize;

use qsd_core::certificate::{certify, Certificate};
use qsd_core::hermitian::HermitianMatrix;
use qsd_core::model::{success_probability, validate_ensemble, validate_povm, Ensemble, Povm};
use qsd_core::oracle::{simulate_game, GameStats};
use qsd_core::problem::{load_problem, povm_from_json, Problem};
use qsd_core::scenario::{
    find_threshold_numeric, scenario_config, sweep_xi, threshold_xi_23, uniform_grid,
    write_sweep_csv, RegionPair,
};
use qsd_core::sdp::{build_dual_sdp, export_sdpa};
use qsd_core::solver::{solve, InitMode, SolveReport, SolverConfig};

/// Fraction of sweep points allowed to fail before `scenario` exits nonzero.
const MAX_FAILED_FRACTION: f64 = 0.01;

#[derive(Parser)]
#[command(
    name = "qsd",
    version,
    about = "Minimum-error quantum state discrimination"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find the optimal POVM for a problem file and certify it.
    Solve {
        problem: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Sweep the three-state coplanar family over the prior and locate the
    /// region boundaries.
    Scenario(ScenarioArgs),
    /// Write the equivalent SDP in sparse SDPA format.
    ExportSdp {
        problem: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Play the guessing game repeatedly and compare with the analytic rate.
    Simulate(SimulateArgs),
    /// Certify the "povm" array of a problem file.
    Certify { problem: PathBuf },
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 10_000)]
    max_iterations: usize,
    #[arg(long, default_value_t = 1e-8)]
    gap_tolerance: f64,
    /// Perturb the uniform start with Hermitian noise of this amplitude.
    #[arg(long)]
    jitter: Option<f64>,
    /// Seed for --jitter.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            max_iterations: self.max_iterations,
            gap_tolerance: self.gap_tolerance,
            init_mode: match self.jitter {
                Some(amplitude) => InitMode::RandomJitter {
                    seed: self.seed,
                    amplitude,
                },
                None => InitMode::Uniform,
            },
            ..SolverConfig::default()
        }
    }
}

#[derive(Args)]
struct ScenarioArgs {
    /// Half-angle between the two symmetric states, in (0, π/4).
    #[arg(long, allow_hyphen_values = true)]
    phi: f64,
    #[arg(long, default_value_t = 201)]
    points: usize,
    /// CSV destination; stdout when omitted (the summary then goes to stderr).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the available cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Skip the bisection for the region boundaries.
    #[arg(long)]
    skip_boundaries: bool,
}

#[derive(Args)]
struct SimulateArgs {
    problem: PathBuf,
    /// JSON POVM: an array of matrices or an object with a "povm" array.
    #[arg(long, conflicts_with = "optimal", required_unless_present = "optimal")]
    povm: Option<PathBuf>,
    /// Solve for the optimal POVM first.
    #[arg(long)]
    optimal: bool,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

enum Failure {
    Invalid(String),
    NotConverged(String),
}

impl From<qsd_core::Error> for Failure {
    fn from(err: qsd_core::Error) -> Self {
        match err {
            qsd_core::Error::ConvergenceFailure => Failure::NotConverged(err.to_string()),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(err: std::io::Error) -> Self {
        Failure::Invalid(err.to_string())
    }
}

type CliResult = std::result::Result<(), Failure>;

fn init_logging() {
    let (level, unknown) = match std::env::var("QSD_LOG").as_deref() {
        Err(_) | Ok("") => (LevelFilter::Warn, None),
        Ok("quiet") => (LevelFilter::Off, None),
        Ok("info") => (LevelFilter::Info, None),
        Ok("debug") => (LevelFilter::Debug, None),
        Ok(other) => (LevelFilter::Warn, Some(other.to_string())),
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
    if let Some(value) = unknown {
        warn!("QSD_LOG={value:?} is not one of quiet, info, debug; using warnings only");
    }
}

fn print_json<T: Serialize>(value: &T) -> CliResult {
    let text = serde_json::to_string_pretty(value).expect("outputs always serialize");
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "{text}")?;
    Ok(())
}

fn load_valid(path: &Path) -> Result<Problem, Failure> {
    let problem = load_problem(path)?;
    validate_ensemble(&problem.ensemble).into_result()?;
    Ok(problem)
}

fn pairs(m: &Povm) -> Vec<Vec<Vec<[f64; 2]>>> {
    m.elements().iter().map(HermitianMatrix::to_pairs).collect()
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    success_probability: f64,
    converged: bool,
    iterations: usize,
    gap: f64,
    monotonicity_violations: usize,
    povm: Vec<Vec<Vec<[f64; 2]>>>,
    lagrange_operator: Vec<Vec<[f64; 2]>>,
    certificate: &'a Certificate,
}

fn run_solver(e: &Ensemble, cfg: &SolverConfig) -> Result<SolveReport, Failure> {
    cfg.validate()?;
    let report = solve(e, cfg)?;
    info!(
        "{} iterations, P_s = {}, gap = {:e}",
        report.iterations_used, report.success_probability, report.gap
    );
    Ok(report)
}

fn cmd_solve(problem: &Path, args: &SolverArgs) -> CliResult {
    let cfg = args.config();
    cfg.validate()?;
    let problem = load_valid(problem)?;
    let report = run_solver(&problem.ensemble, &cfg)?;
    print_json(&SolveOutput {
        success_probability: report.success_probability,
        converged: report.converged,
        iterations: report.iterations_used,
        gap: report.gap,
        monotonicity_violations: report.monotonicity_violations,
        povm: pairs(&report.povm),
        lagrange_operator: report.lagrange_operator.to_pairs(),
        certificate: &report.certificate,
    })?;
    if report.converged {
        Ok(())
    } else {
        Err(Failure::NotConverged(format!(
            "gap {:e} after {} iterations",
            report.gap, report.iterations_used
        )))
    }
}

#[derive(Serialize)]
struct ScenarioSummary {
    phi: f64,
    points: usize,
    failed_points: usize,
    /// Closed-form II/III threshold `1/(1 + sin φ cos φ)`.
    threshold_two_three: f64,
    boundary_one_two: Option<f64>,
    boundary_two_three: Option<f64>,
    csv: Option<PathBuf>,
}

fn numeric_boundary(phi: f64, pair: RegionPair, cfg: &SolverConfig) -> Option<f64> {
    match find_threshold_numeric(phi, pair, cfg) {
        Ok(xi) => Some(xi),
        Err(err) => {
            warn!("boundary {pair}: {err}");
            None
        }
    }
}

fn cmd_scenario(args: &ScenarioArgs) -> CliResult {
    let phi = args.phi;
    if !(phi > 0.0 && phi < std::f64::consts::FRAC_PI_4) {
        return Err(Failure::Invalid(format!("--phi {phi} is outside (0, π/4)")));
    }
    if args.points < 2 {
        return Err(Failure::Invalid("--points must be at least 2".into()));
    }
    if args.jobs == Some(0) {
        return Err(Failure::Invalid("--jobs must be at least 1".into()));
    }
    let cfg = scenario_config();
    let work = || -> Result<ScenarioSummary, Failure> {
        let points = sweep_xi(phi, &uniform_grid(args.points), &cfg)?;
        let failed = points.iter().filter(|p| p.is_flagged()).count();
        for p in points.iter().filter(|p| p.is_flagged()) {
            warn!(
                "xi = {}: {}",
                p.xi,
                p.failure.as_deref().unwrap_or("gap above tolerance")
            );
        }
        match &args.out {
            Some(path) => write_sweep_csv(&points, BufWriter::new(File::create(path)?))?,
            None => write_sweep_csv(&points, std::io::stdout().lock())?,
        }
        let (one_two, two_three) = if args.skip_boundaries {
            (None, None)
        } else {
            (
                numeric_boundary(phi, RegionPair::OneTwo, &cfg),
                numeric_boundary(phi, RegionPair::TwoThree, &cfg),
            )
        };
        Ok(ScenarioSummary {
            phi,
            points: points.len(),
            failed_points: failed,
            threshold_two_three: threshold_xi_23(phi)?,
            boundary_one_two: one_two,
            boundary_two_three: two_three,
            csv: args.out.clone(),
        })
    };
    let summary = match args.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure::Invalid(e.to_string()))?
            .install(work)?,
        None => work()?,
    };
    if args.out.is_some() {
        print_json(&summary)?;
    } else {
        eprintln!(
            "{}",
            serde_json::to_string_pretty(&summary).expect("summary serializes")
        );
    }
    if summary.failed_points as f64 > MAX_FAILED_FRACTION * summary.points as f64 {
        return Err(Failure::NotConverged(format!(
            "{} of {} sweep points failed",
            summary.failed_points, summary.points
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct ExportSummary {
    #[serde(rename = "mDIM")]
    m_dim: usize,
    #[serde(rename = "nBLOCK")]
    n_block: usize,
    block_sizes: Vec<usize>,
    out: PathBuf,
}

fn cmd_export(problem: &Path, out: &Path) -> CliResult {
    let problem = load_valid(problem)?;
    let sdp = build_dual_sdp(&problem.ensemble);
    export_sdpa(&sdp, out)?;
    print_json(&ExportSummary {
        m_dim: sdp.constraints.len(),
        n_block: sdp.block_count,
        block_sizes: vec![2 * sdp.block_dim; sdp.block_count],
        out: out.to_path_buf(),
    })
}

#[derive(Serialize)]
struct SimulateOutput {
    #[serde(flatten)]
    stats: GameStats,
    seed: u64,
    /// `P_s` of the simulated POVM.
    expected_rate: f64,
    sigma_distance: f64,
}

fn cmd_simulate(args: &SimulateArgs) -> CliResult {
    if args.trials == 0 {
        return Err(Failure::Invalid("--trials must be at least 1".into()));
    }
    let problem = load_valid(&args.problem)?;
    let e = &problem.ensemble;
    let povm = match &args.povm {
        Some(path) => {
            let m = povm_from_json(&std::fs::read_to_string(path)?, e.dim(), e.len())?;
            validate_povm(&m, e.dim()).into_result()?;
            m
        }
        None => {
            let report = run_solver(e, &SolverConfig::default())?;
            if !report.converged {
                return Err(Failure::NotConverged(format!(
                    "solver stopped at gap {:e}",
                    report.gap
                )));
            }
            report.povm
        }
    };
    let expected = success_probability(e, &povm)?;
    let stats = simulate_game(e, &povm, args.trials, args.seed)?;
    print_json(&SimulateOutput {
        stats,
        seed: args.seed,
        expected_rate: expected,
        sigma_distance: stats.sigma_distance(expected),
    })
}

#[derive(Serialize)]
struct CertifyOutput<'a> {
    optimal: bool,
    #[serde(flatten)]
    certificate: &'a Certificate,
}

fn cmd_certify(problem: &Path) -> CliResult {
    let problem = load_valid(problem)?;
    let povm = problem
        .povm
        .ok_or_else(|| Failure::Invalid("povm: the problem file has no \"povm\" array".into()))?;
    validate_povm(&povm, problem.ensemble.dim()).into_result()?;
    let certificate = certify(&problem.ensemble, &povm)?;
    print_json(&CertifyOutput {
        optimal: certificate.is_optimal(SolverConfig::default().gap_tolerance),
        certificate: &certificate,
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    init_logging();
    let outcome = match &cli.command {
        Command::Solve { problem, solver } => cmd_solve(problem, solver),
        Command::Scenario(args) => cmd_scenario(args),
        Command::ExportSdp { problem, out } => cmd_export(problem, out),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Certify { problem } => cmd_certify(problem),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::NotConverged(msg)) => {
            eprintln!("error: did not converge: {msg}");
            ExitCode::from(2)
        }
    }
}
