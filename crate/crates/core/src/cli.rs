//! The `hyperbell` command line.
//!
//! Exit codes: 0 success, 1 verification or runtime failure, 2 usage error.
//! Every command is a pure function of its arguments and seed; `--threads`
//! changes only the worker count.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bell::{enumerate_terms, quantum_value, Backend};
use crate::efficiency::{
    eta_threshold, min_blocks, BoundsReport, NoiseParams, DEFAULT_BLOCK_CAP, DEFAULT_EPSILON,
    DEFAULT_ETA, DEFAULT_P,
};
use crate::error::Error;
use crate::lhv::{brute_force_bound, factored_bound};
use crate::montecarlo::{estimate_beta, SimulationDocument};
use crate::state::verify_perfect_correlations;

/// Environment variable consulted when `--seed` is absent.
pub const SEED_ENV: &str = "HYPERBELL_SEED";

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

/// Largest N accepted by `verify`, `bounds` and `sweep`.
pub const MAX_CLI_BLOCKS: usize = 31;
const VERIFY_MAX_BLOCKS: usize = 10;
const DUMP_MAX_BLOCKS: usize = 4;
/// `verify` scans every local assignment up to this N.
const VERIFY_BRUTE_FORCE_BLOCKS: usize = 2;

#[derive(Debug, Parser)]
#[command(
    name = "hyperbell",
    version,
    about = "Hyperentangled Bell inequality toolkit"
)]
struct Cli {
    /// Worker threads (results do not depend on it)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check perfect correlations, quantum value and local bound
    Verify {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..=VERIFY_MAX_BLOCKS as u64))]
        n: u64,
    },
    /// Ideal and noisy bounds for one N
    Bounds {
        #[arg(long, value_parser = block_range())]
        n: u64,
        #[command(flatten)]
        noise: NoiseArgs,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimum detector efficiency for a loophole-free violation
    EtaThreshold {
        #[arg(long, value_parser = block_range(), default_value_t = 1)]
        n: u64,
        /// Use this local-bound / quantum-value ratio directly
        #[arg(long)]
        ratio: Option<f64>,
        #[command(flatten)]
        noise: NoiseArgs,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Smallest N violating the lossy, noisy inequality
    MinN {
        #[command(flatten)]
        noise: NoiseArgs,
        #[arg(long, default_value_t = DEFAULT_BLOCK_CAP)]
        n_max: usize,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bounds table over a range of N
    Sweep(SweepArgs),
    /// Monte Carlo estimate of the Bell value
    Simulate(SimulateArgs),
    /// Print every term of the expression
    DumpTerms {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..=DUMP_MAX_BLOCKS as u64))]
        n: u64,
    },
}

fn block_range() -> clap::builder::RangedU64ValueParser<u64> {
    clap::value_parser!(u64).range(1..=MAX_CLI_BLOCKS as u64)
}

#[derive(Debug, Clone, Copy, Args)]
struct NoiseArgs {
    #[arg(long, default_value_t = DEFAULT_ETA)]
    eta: f64,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    eps: f64,
    #[arg(long, default_value_t = DEFAULT_P)]
    p: f64,
}

impl NoiseArgs {
    fn params(&self) -> Result<NoiseParams, CliError> {
        NoiseParams::new(self.eps, self.p, self.eta).map_err(CliError::Usage)
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// First N
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Last N (inclusive)
    #[arg(long, default_value_t = 8)]
    n_max: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.33")]
    eta: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.15")]
    eps: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.98")]
    p: Vec<f64>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_parser = block_range())]
    n: u64,
    /// Shots per term
    #[arg(long, default_value_t = 100_000)]
    shots: u64,
    #[command(flatten)]
    noise: NoiseArgs,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    seed: u64,
    /// Terms simulated exhaustively up to this count, subsampled beyond
    #[arg(long, default_value_t = 4096)]
    term_budget: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug)]
enum CliError {
    Usage(Error),
    Failure(String),
    Verification(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Failure(_) | CliError::Verification(_) => EXIT_FAILURE,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(e) => write!(f, "usage error: {e}"),
            CliError::Failure(m) => write!(f, "error: {m}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Failure(e.to_string())
    }
}

/// One row of the bounds table; column order is fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRow {
    pub n: usize,
    pub beta_epr: u128,
    pub beta_qm: u128,
    pub beta_epr_noisy: f64,
    pub beta_qm_noisy: f64,
    pub ratio: f64,
    pub eta_min: Option<f64>,
    pub violated: bool,
    pub eta: f64,
    pub eps: f64,
    pub p: f64,
}

pub const OUTPUT_COLUMNS: [&str; 11] = [
    "n",
    "beta_epr",
    "beta_qm",
    "beta_epr_noisy",
    "beta_qm_noisy",
    "ratio",
    "eta_min",
    "violated",
    "eta",
    "eps",
    "p",
];

impl OutputRow {
    pub fn from_report(report: &BoundsReport, noise: &NoiseParams) -> Self {
        OutputRow {
            n: report.n,
            beta_epr: report.beta_epr,
            beta_qm: report.beta_qm,
            beta_epr_noisy: report.beta_epr_noisy,
            beta_qm_noisy: report.beta_qm_noisy,
            ratio: report.ratio,
            eta_min: report.eta_min,
            violated: report.violated,
            eta: noise.eta,
            eps: noise.epsilon,
            p: noise.p,
        }
    }
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)
            .map_err(|e| CliError::Failure(e.to_string()))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Failure(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Failure(e.to_string()))
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Failure(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn emit(content: &str, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, content)
            .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", path.display()))),
        None => stdout
            .write_all(content.as_bytes())
            .map_err(|e| CliError::Failure(e.to_string())),
    }
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    n: usize,
    correlations: CorrelationSummary,
    beta_qm: Option<i64>,
    beta_qm_expected: u128,
    beta_epr: u128,
    beta_epr_expected: u128,
    beta_epr_method: &'static str,
    ok: bool,
    failures: Vec<String>,
}

#[derive(Debug, Serialize)]
struct CorrelationSummary {
    passed: usize,
    total: usize,
}

fn cmd_verify(n: usize, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut failures = Vec::new();
    let report = verify_perfect_correlations(n)?;
    for c in report.failures() {
        failures.push(format!(
            "correlation {} block {}: expected {}, observed {}",
            c.name, c.block, c.expected, c.observed
        ));
    }
    let beta_qm_expected = 4u128.pow(n as u32);
    let beta_qm = match quantum_value(n, Backend::Stabilizer) {
        Ok(v) => {
            if v as u128 != beta_qm_expected {
                failures.push(format!("beta_qm: expected {beta_qm_expected}, got {v}"));
            }
            Some(v)
        }
        Err(e) => {
            failures.push(format!("beta_qm: {e}"));
            None
        }
    };
    let (beta_epr, method) = if n <= VERIFY_BRUTE_FORCE_BLOCKS {
        (brute_force_bound(n)?.max_value as u128, "brute_force")
    } else {
        (factored_bound(n)?, "factored")
    };
    let beta_epr_expected = 2u128.pow(n as u32);
    if beta_epr != beta_epr_expected {
        failures.push(format!(
            "beta_epr: expected {beta_epr_expected}, got {beta_epr}"
        ));
    }
    let ok = failures.is_empty();
    let doc = VerifyReport {
        n,
        correlations: CorrelationSummary {
            passed: report.passed(),
            total: report.total(),
        },
        beta_qm,
        beta_qm_expected,
        beta_epr,
        beta_epr_expected,
        beta_epr_method: method,
        ok,
        failures,
    };
    emit(&to_json(&doc)?, None, stdout)?;
    if ok {
        Ok(())
    } else {
        Err(CliError::Verification(doc.failures.join("; ")))
    }
}

fn cmd_bounds(
    n: usize,
    noise: &NoiseParams,
    format: Format,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let report = BoundsReport::compute(n, noise)?;
    let text = match format {
        Format::Json => to_json(&json!({ "noise": noise, "report": report }))?,
        Format::Csv => to_csv(&[OutputRow::from_report(&report, noise)])?,
    };
    emit(&text, out, stdout)
}

#[derive(Debug, Serialize)]
struct ThresholdRow {
    n: Option<usize>,
    ratio: f64,
    eta_min: f64,
    noisy_ratio: Option<f64>,
    noisy_eta_min: Option<f64>,
}

fn cmd_eta_threshold(
    n: usize,
    ratio: Option<f64>,
    noise: &NoiseParams,
    format: Format,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let row = match ratio {
        Some(r) => ThresholdRow {
            n: None,
            ratio: r,
            eta_min: eta_threshold(r, 1.0).map_err(CliError::Usage)?,
            noisy_ratio: None,
            noisy_eta_min: None,
        },
        None => {
            let report = BoundsReport::compute(n, noise)?;
            ThresholdRow {
                n: Some(n),
                ratio: report.ideal_ratio,
                eta_min: report.eta_min_ideal,
                noisy_ratio: Some(report.ratio),
                noisy_eta_min: report.eta_min,
            }
        }
    };
    let text = match format {
        Format::Json => to_json(&row)?,
        Format::Csv => to_csv(&[row])?,
    };
    emit(&text, out, stdout)
}

fn cmd_min_n(
    noise: &NoiseParams,
    cap: usize,
    format: Format,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let result = min_blocks(noise, cap)?;
    let text = match format {
        Format::Json => to_json(&json!({
            "eta": noise.eta,
            "eps": noise.epsilon,
            "p": noise.p,
            "first_crossing": result.first_crossing,
            "visibility": result.visibility,
            "table": result.table,
        }))?,
        Format::Csv => to_csv(&result.table)?,
    };
    emit(&text, out, stdout)
}

/// Builds the sweep table; rows ordered by (eta, eps, p, N).
pub fn sweep_rows(
    n_range: std::ops::RangeInclusive<usize>,
    etas: &[f64],
    epss: &[f64],
    ps: &[f64],
) -> crate::Result<Vec<OutputRow>> {
    let mut rows = Vec::new();
    for &eta in etas {
        for &eps in epss {
            for &p in ps {
                let noise = NoiseParams::new(eps, p, eta)?;
                for n in n_range.clone() {
                    let report = BoundsReport::compute(n, &noise)?;
                    rows.push(OutputRow::from_report(&report, &noise));
                }
            }
        }
    }
    Ok(rows)
}

fn cmd_sweep(args: &SweepArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    if args.n == 0 || args.n > args.n_max || args.n_max > MAX_CLI_BLOCKS {
        return Err(CliError::Usage(Error::ParameterOutOfRange {
            name: "n range",
            value: args.n as f64,
            range: "1 <= n <= n-max <= 31",
        }));
    }
    if args.eta.is_empty() || args.eps.is_empty() || args.p.is_empty() {
        return Err(CliError::Usage(Error::ParameterOutOfRange {
            name: "parameter list",
            value: 0.0,
            range: "nonempty",
        }));
    }
    let rows =
        sweep_rows(args.n..=args.n_max, &args.eta, &args.eps, &args.p).map_err(CliError::Usage)?;
    let text = match args.format {
        Format::Csv => to_csv(&rows)?,
        Format::Json => to_json(&json!({
            "config": {
                "n": args.n,
                "n_max": args.n_max,
                "eta": args.eta,
                "eps": args.eps,
                "p": args.p,
            },
            "rows": rows,
        }))?,
    };
    emit(&text, args.out.as_deref(), stdout)
}

fn cmd_simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let noise = args.noise.params()?;
    let n = args.n as usize;
    let estimate =
        estimate_beta(n, args.shots, &noise, args.seed, args.term_budget).map_err(|e| match e {
            Error::ParameterOutOfRange { .. } => CliError::Usage(e),
            other => CliError::Failure(other.to_string()),
        })?;
    let doc = SimulationDocument::new(n, &noise, estimate);
    emit(&to_json(&doc)?, args.out.as_deref(), stdout)
}

fn cmd_dump_terms(n: usize, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut text = String::new();
    for term in enumerate_terms(n)? {
        text.push_str(&format!(
            "{}\t{}\t{}\n",
            term.index(),
            term.choices_label(),
            term
        ));
    }
    emit(&text, None, stdout)
}

fn dispatch(command: &Command, stdout: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Verify { n } => cmd_verify(*n as usize, stdout),
        Command::Bounds {
            n,
            noise,
            format,
            out,
        } => cmd_bounds(
            *n as usize,
            &noise.params()?,
            *format,
            out.as_deref(),
            stdout,
        ),
        Command::EtaThreshold {
            n,
            ratio,
            noise,
            format,
            out,
        } => cmd_eta_threshold(
            *n as usize,
            *ratio,
            &noise.params()?,
            *format,
            out.as_deref(),
            stdout,
        ),
        Command::MinN {
            noise,
            n_max,
            format,
            out,
        } => cmd_min_n(&noise.params()?, *n_max, *format, out.as_deref(), stdout),
        Command::Sweep(args) => cmd_sweep(args, stdout),
        Command::Simulate(args) => cmd_simulate(args, stdout),
        Command::DumpTerms { n } => cmd_dump_terms(*n as usize, stdout),
    }
}

/// Parses `args` (including the program name) and runs the command. Returns
/// the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.to_string();
            if code == 0 {
                let _ = stdout.write_all(text.as_bytes());
                return EXIT_OK;
            }
            let _ = stderr.write_all(text.as_bytes());
            return EXIT_USAGE;
        }
    };
    // Commands render into a buffer so they can run inside a worker pool.
    let mut buffer = Vec::new();
    let result = match cli.threads {
        Some(0) => Err(CliError::Usage(Error::ParameterOutOfRange {
            name: "threads",
            value: 0.0,
            range: "[1, inf)",
        })),
        Some(threads) => match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => pool.install(|| dispatch(&cli.command, &mut buffer)),
            Err(e) => Err(CliError::Failure(e.to_string())),
        },
        None => dispatch(&cli.command, &mut buffer),
    };
    if stdout.write_all(&buffer).is_err() {
        return EXIT_FAILURE;
    }
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            e.code()
        }
    }
}
