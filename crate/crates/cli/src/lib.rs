//! Command layer for the verification binary: run configuration, suite
//! dispatch, and report emission.
//!
//! The library half exists so the whole pipeline — suite → records → rendered
//! report — can be driven in-process by tests. `main` is a thin argv adapter
//! over [`run`].

pub mod report;
pub mod suites;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use subconvex_core::forms::{load_maass, CoefficientSource};

use report::{emit_report, Record, ReportFormat};
use suites::SuiteCtx;

/// Everything that can stop a run before or after the numerics.
///
/// Failing *checks* are not errors: they come back as records with
/// `pass = false` and the caller decides the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// The requested run is not executable as configured.
    #[error("configuration error: {0}")]
    Config(String),
    /// A report was requested for zero records; every suite must produce at
    /// least one, so this is a wiring bug or an impossible filter.
    #[error("refusing to render an empty report")]
    EmptyReport,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Process exit code for this error: 2 for unusable configuration,
    /// 1 for environmental failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::EmptyReport => 2,
            CliError::Io(_) => 1,
        }
    }
}

/// The ten run targets, one per CLI subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    VerifyArith,
    VerifyCharacters,
    VerifyVoronoi,
    VerifyPoisson,
    VerifyDualsum,
    VerifyJutila,
    VerifyCircle,
    VerifyBilinear,
    ComputeL,
    ScanExponent,
}

impl Command {
    pub const ALL: [Command; 10] = [
        Command::VerifyArith,
        Command::VerifyCharacters,
        Command::VerifyVoronoi,
        Command::VerifyPoisson,
        Command::VerifyDualsum,
        Command::VerifyJutila,
        Command::VerifyCircle,
        Command::VerifyBilinear,
        Command::ComputeL,
        Command::ScanExponent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::VerifyArith => "verify-arith",
            Command::VerifyCharacters => "verify-characters",
            Command::VerifyVoronoi => "verify-voronoi",
            Command::VerifyPoisson => "verify-poisson",
            Command::VerifyDualsum => "verify-dualsum",
            Command::VerifyJutila => "verify-jutila",
            Command::VerifyCircle => "verify-circle",
            Command::VerifyBilinear => "verify-bilinear",
            Command::ComputeL => "compute-l",
            Command::ScanExponent => "scan-exponent",
        }
    }

    pub fn from_name(name: &str) -> Option<Command> {
        Command::ALL.iter().copied().find(|c| c.name() == name)
    }

    /// Whether `--coeff-file` means anything to this command.
    fn accepts_coeff_file(self) -> bool {
        matches!(
            self,
            Command::VerifyDualsum | Command::ComputeL | Command::ScanExponent
        )
    }
}

/// A fully resolved run: command plus every knob, after flag/file merging.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    /// Master seed; every suite derives per-case streams from it.
    pub seed: u64,
    /// Named tolerance overrides; unset names use suite defaults.
    pub tol: BTreeMap<String, f64>,
    /// Where to write the report; `None` keeps it in memory for the caller.
    pub out: Option<PathBuf>,
    pub format: ReportFormat,
    /// Worker threads for case evaluation; 0 means the library default.
    pub jobs: usize,
    /// External coefficient file for the commands that can consume one.
    pub coeff_file: Option<PathBuf>,
    /// Working exponent for scan-exponent; must lie in (0, 1/18).
    pub eta: f64,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            seed: 0,
            tol: BTreeMap::new(),
            out: None,
            format: ReportFormat::Csv,
            jobs: 0,
            coeff_file: None,
            eta: 0.05,
        }
    }
}

/// What a run produced: the records, the rendered report, and the tallies
/// the process exit code is derived from.
#[derive(Debug)]
pub struct RunOutcome {
    pub records: Vec<Record>,
    pub rendered: String,
    pub failed: usize,
    pub total: usize,
}

/// Optional config file: same knobs as the flags, JSON, all fields optional.
/// Flags win over file values.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub format: Option<String>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub coeff_file: Option<PathBuf>,
    pub eta: Option<f64>,
    #[serde(default)]
    pub tol: BTreeMap<String, f64>,
}

pub fn load_file_config(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Config(format!("cannot read config file {}: {e}", path.display()))
    })?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("config file {}: {e}", path.display())))
}

/// Parse one `--tol NAME=VALUE` occurrence.
pub fn parse_tol_flag(s: &str) -> Result<(String, f64), CliError> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--tol expects NAME=VALUE, got {s:?}")))?;
    let name = name.trim();
    if name.is_empty() {
        return Err(CliError::Config(format!(
            "--tol expects NAME=VALUE, got {s:?}"
        )));
    }
    let parsed: f64 = value
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("--tol {name}: {value:?} is not a number")))?;
    if !parsed.is_finite() {
        return Err(CliError::Config(format!(
            "--tol {name}: tolerance must be finite, got {value}"
        )));
    }
    Ok((name.to_string(), parsed))
}

/// Execute one configured run end to end: resolve the coefficient source,
/// evaluate the suite, render (and optionally write) the report.
///
/// `Ok` means the run executed; whether the checks inside it passed is
/// reported through [`RunOutcome::failed`].
pub fn run(cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    let mut loaded: Option<CoefficientSource> = None;
    if let Some(path) = &cfg.coeff_file {
        if !cfg.command.accepts_coeff_file() {
            return Err(CliError::Config(format!(
                "--coeff-file is not used by {}; it applies to verify-dualsum, \
                 compute-l and scan-exponent",
                cfg.command.name()
            )));
        }
        match load_maass(path) {
            Ok(src) => {
                if cfg.command == Command::VerifyDualsum {
                    // The dual-sum route is only defined for the built-in
                    // holomorphic form; a *valid* spectral file cannot be
                    // meant for it.
                    return Err(CliError::Config(format!(
                        "{}: coefficient files hold spectral data, but the \
                         dual-sum suite runs on the built-in holomorphic form",
                        path.display()
                    )));
                }
                loaded = Some(src);
            }
            Err(e) => {
                // A file that fails to load is part of the checked surface:
                // report it as a failing record, not a usage error.
                let records = vec![Record::broken(
                    cfg.command.name(),
                    "coefficient-file",
                    path.display().to_string(),
                    e.to_string(),
                )];
                let rendered = emit_report(&records, cfg.format, cfg.out.as_deref())?;
                return Ok(RunOutcome {
                    failed: 1,
                    total: 1,
                    records,
                    rendered,
                });
            }
        }
    }

    let records = if cfg.jobs > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| {
                CliError::Config(format!("cannot build a {}-thread pool: {e}", cfg.jobs))
            })?;
        pool.install(|| dispatch(cfg, loaded.as_ref()))?
    } else {
        dispatch(cfg, loaded.as_ref())?
    };

    let failed = records.iter().filter(|r| !r.pass).count();
    let total = records.len();
    let rendered = emit_report(&records, cfg.format, cfg.out.as_deref())?;
    Ok(RunOutcome {
        records,
        rendered,
        failed,
        total,
    })
}

fn dispatch(cfg: &RunConfig, source: Option<&CoefficientSource>) -> Result<Vec<Record>, CliError> {
    let ctx = SuiteCtx {
        seed: cfg.seed,
        tol: &cfg.tol,
        source,
    };
    Ok(match cfg.command {
        Command::VerifyArith => suites::verify_arith(&ctx),
        Command::VerifyCharacters => suites::verify_characters(&ctx),
        Command::VerifyVoronoi => suites::verify_voronoi(&ctx),
        Command::VerifyPoisson => suites::verify_poisson(&ctx),
        Command::VerifyDualsum => suites::verify_dualsum(&ctx),
        Command::VerifyJutila => suites::verify_jutila(&ctx),
        Command::VerifyCircle => suites::verify_circle(&ctx),
        Command::VerifyBilinear => suites::verify_bilinear(&ctx),
        Command::ComputeL => suites::compute_l(&ctx),
        Command::ScanExponent => suites::scan_exponent(&ctx, cfg.eta)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn command_names_round_trip() {
        for cmd in Command::ALL {
            assert_eq!(Command::from_name(cmd.name()), Some(cmd));
        }
        assert_eq!(Command::from_name("verify-everything"), None);
    }

    #[test]
    fn tol_flag_parses_and_rejects() {
        assert_eq!(
            parse_tol_flag("gauss=1e-8").unwrap(),
            ("gauss".to_string(), 1e-8)
        );
        assert_eq!(
            parse_tol_flag("circle-slope=-0.6").unwrap(),
            ("circle-slope".to_string(), -0.6)
        );
        assert!(matches!(parse_tol_flag("gauss"), Err(CliError::Config(_))));
        assert!(matches!(
            parse_tol_flag("gauss=fast"),
            Err(CliError::Config(_))
        ));
        assert!(matches!(
            parse_tol_flag("=1e-8"),
            Err(CliError::Config(_))
        ));
        assert!(matches!(
            parse_tol_flag("gauss=inf"),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn file_config_parses_all_fields() {
        let cfg: FileConfig = serde_json::from_str(
            r#"{"seed": 9, "format": "json", "jobs": 2, "eta": 0.03,
                "tol": {"gauss": 1e-8, "weil": 1.0}}"#,
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(9));
        assert_eq!(cfg.format.as_deref(), Some("json"));
        assert_eq!(cfg.jobs, Some(2));
        assert_eq!(cfg.tol.get("gauss"), Some(&1e-8));
        assert!(serde_json::from_str::<FileConfig>(r#"{"sedd": 9}"#).is_err());
    }

    #[test]
    fn coeff_file_is_rejected_on_suites_that_cannot_use_it() {
        let mut cfg = RunConfig::new(Command::VerifyArith);
        cfg.coeff_file = Some(PathBuf::from("/nonexistent/anything.dat"));
        let err = run(&cfg).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn corrupted_coeff_file_becomes_a_failing_record() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "maass mu=2.5 level=1 neb=0 parity=0").unwrap();
        writeln!(file, "1 0.9 0.0").unwrap();
        writeln!(file, "2 0.7 0.1").unwrap();
        file.flush().unwrap();
        let mut cfg = RunConfig::new(Command::VerifyDualsum);
        cfg.coeff_file = Some(file.path().to_path_buf());
        let outcome = run(&cfg).unwrap();
        assert_eq!(outcome.failed, 1);
        assert_eq!(outcome.total, 1);
        assert!(outcome.rendered.contains("first coefficient must be 1"));
    }

    #[test]
    fn valid_spectral_file_cannot_drive_the_dualsum_suite() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "maass mu=2.5 level=1 neb=0 parity=0").unwrap();
        writeln!(file, "1 1.0 0.0").unwrap();
        writeln!(file, "2 0.7 0.0").unwrap();
        file.flush().unwrap();
        let mut cfg = RunConfig::new(Command::VerifyDualsum);
        cfg.coeff_file = Some(file.path().to_path_buf());
        let err = run(&cfg).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
    }

    #[test]
    fn scan_exponent_rejects_inadmissible_eta_with_exit_code_2() {
        let mut cfg = RunConfig::new(Command::ScanExponent);
        cfg.eta = 0.2;
        let err = run(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
