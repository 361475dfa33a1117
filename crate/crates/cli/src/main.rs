use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use subconvex_cli::report::ReportFormat;
use subconvex_cli::{
    load_file_config, parse_tol_flag, run, CliError, Command, FileConfig, RunConfig,
};

/// Numerical verification suites for the subconvexity toolkit.
///
/// Every subcommand draws a deterministic case grid from `--seed`, runs the
/// corresponding checks, and emits one report record per check. The process
/// exits 0 when every check passes, 1 when any fails, and 2 when the run is
/// misconfigured.
#[derive(Debug, Parser)]
#[command(name = "subconvex", version, disable_help_subcommand = true)]
struct Cli {
    /// Master seed for all randomized case draws.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Tolerance override as NAME=VALUE; repeatable.
    #[arg(long, global = true, value_name = "NAME=VALUE")]
    tol: Vec<String>,

    /// Write the report to this path instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Report format: csv or json.
    #[arg(long, global = true, value_name = "FORMAT")]
    format: Option<String>,

    /// Worker threads for case evaluation (0 = library default).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    /// External coefficient file; consumed by verify-dualsum, compute-l,
    /// and scan-exponent only.
    #[arg(long, global = true, value_name = "PATH")]
    coeff_file: Option<PathBuf>,

    /// JSON config file carrying the same knobs as the flags; flags win.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Kloosterman sums against the divisor-function bound.
    VerifyArith,
    /// Gauss-sum magnitude for every primitive character, moduli up to 200.
    VerifyCharacters,
    /// Voronoi summation identity on a fixed (a, q, Y) grid.
    VerifyVoronoi,
    /// Character-twisted Poisson summation on seeded tuples.
    VerifyPoisson,
    /// Composed dual-sum route against direct evaluation.
    VerifyDualsum,
    /// Moduli-average L² error term: quadrature vs Parseval vs envelope.
    VerifyJutila,
    /// Circle-method approximation ladder and its decay slope.
    VerifyCircle,
    /// Bilinear dual form across its three modulus branches.
    VerifyBilinear,
    /// Completed-L functional equation and root-number unitarity.
    ComputeL,
    /// Central-point growth scan over prime moduli.
    ScanExponent {
        /// Working exponent; must lie strictly inside (0, 1/18).
        #[arg(long)]
        eta: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: Cli) -> Result<ExitCode, CliError> {
    let cfg = build_config(cli)?;
    let outcome = run(&cfg)?;
    let status = format!(
        "{}: {} checks, {} failed",
        cfg.command.name(),
        outcome.total,
        outcome.failed
    );
    match &cfg.out {
        Some(path) => println!("{status} -> {}", path.display()),
        None => {
            // stdout carries only the report; the tally goes to stderr.
            print!("{}", outcome.rendered);
            eprintln!("{status}");
        }
    }
    Ok(if outcome.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn build_config(cli: Cli) -> Result<RunConfig, CliError> {
    let file: FileConfig = match &cli.config {
        Some(path) => load_file_config(path)?,
        None => FileConfig::default(),
    };
    let (command, eta_flag) = match cli.command {
        Cmd::VerifyArith => (Command::VerifyArith, None),
        Cmd::VerifyCharacters => (Command::VerifyCharacters, None),
        Cmd::VerifyVoronoi => (Command::VerifyVoronoi, None),
        Cmd::VerifyPoisson => (Command::VerifyPoisson, None),
        Cmd::VerifyDualsum => (Command::VerifyDualsum, None),
        Cmd::VerifyJutila => (Command::VerifyJutila, None),
        Cmd::VerifyCircle => (Command::VerifyCircle, None),
        Cmd::VerifyBilinear => (Command::VerifyBilinear, None),
        Cmd::ComputeL => (Command::ComputeL, None),
        Cmd::ScanExponent { eta } => (Command::ScanExponent, eta),
    };
    let mut cfg = RunConfig::new(command);
    cfg.seed = cli.seed.or(file.seed).unwrap_or(0);
    cfg.out = cli.out.or(file.out);
    cfg.jobs = cli.jobs.or(file.jobs).unwrap_or(0);
    cfg.coeff_file = cli.coeff_file.or(file.coeff_file);
    if let Some(eta) = eta_flag.or(file.eta) {
        cfg.eta = eta;
    }
    if let Some(name) = cli.format.or(file.format) {
        cfg.format = ReportFormat::parse(&name).ok_or_else(|| {
            CliError::Config(format!("unknown format {name:?}; expected csv or json"))
        })?;
    }
    cfg.tol = file.tol;
    for raw in &cli.tol {
        let (name, value) = parse_tol_flag(raw)?;
        cfg.tol.insert(name, value);
    }
    Ok(cfg)
}
