//! Command-line front end.
//!
//! Exit codes: `0` success / PASS, `1` verification FAIL, `2` usage or
//! validation error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::elliptope::det3;
use crate::elliptope::{sample_elliptope, write_points_csv, Grid};
use crate::error::GpiError;
use crate::moments::{moment, CovarianceMatrix, ExponentVector};
use crate::polynomial::{check_derivative_identity, check_edge_reduction, check_stein_reduction, phi_polynomial};
use crate::scalar::{parse_rational, rational_to_string};
use crate::verifier::{
    check_all_twos, grid_scan_rows, induction_chain, validate_even_triple, verify_gpi3, write_scan_csv, PhiModel,
    VerifyConfig, SCHEMA_VERSION,
};
use crate::{Rational, Scalar};

pub const DEFAULT_RESOLUTION: f64 = 0.05;
pub const DEFAULT_SAMPLES: usize = 1_000_000;
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Parser)]
#[command(name = "gpikit", version, about = "Exact Gaussian moments and Gaussian product inequality checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Grid spacing for scans.
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    resolution: f64,
    /// Monte Carlo sample count.
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, env = "GPIKIT_WORKERS")]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Write the JSON report (or CSV data) to this path.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact mixed moment E[X_1^k_1 ... X_n^k_n].
    Moment {
        /// Exponents, comma separated.
        #[arg(long)]
        p: String,
        /// Off-diagonal correlations (upper triangle, row-major) of a unit-diagonal covariance.
        #[arg(long, allow_hyphen_values = true, conflicts_with = "cov")]
        corr: Option<String>,
        /// Full covariance, row-major.
        #[arg(long, allow_hyphen_values = true)]
        cov: Option<String>,
    },
    /// The moment map as an exact polynomial in a = s12, b = s13, c = s23.
    Phi {
        #[arg(long)]
        p: String,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Full verification of GPI_3 for an even exponent triple.
    Verify {
        #[arg(long)]
        p: String,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Exact derivative, Stein-reduction and edge-reduction identities.
    Identities {
        #[arg(long)]
        p: String,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Reduction chain down to (2,2,2).
    Chain {
        #[arg(long)]
        p: String,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Moment map on the elliptope grid as CSV `a,b,c,phi,margin`.
    Scan {
        #[arg(long)]
        p: String,
        #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
        resolution: f64,
        #[arg(long, env = "GPIKIT_WORKERS")]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// E[X_1^2 ... X_n^2] >= prod E[X_i^2] on random covariances.
    Alltwos {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Elliptope lattice points as CSV `a,b,c,det,region`.
    Grid {
        #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
        resolution: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Uniform elliptope samples as CSV `a,b,c,det,region`.
    Sample {
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Echo of the inputs that determine a report.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RunConfig {
    pub subcommand: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exponents: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
}

enum Failure {
    Usage(String),
    Io(io::Error),
}

impl From<GpiError> for Failure {
    fn from(e: GpiError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

type CliResult = Result<bool, Failure>;

pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn parse_exponents(text: &str) -> Result<ExponentVector, Failure> {
    Ok(text.parse::<ExponentVector>()?)
}

fn parse_rationals(text: &str) -> Result<Vec<Rational>, Failure> {
    text.split(',')
        .map(|t| parse_rational(t).ok_or_else(|| Failure::Usage(format!("`{}` is not a rational number", t.trim()))))
        .collect()
}

fn resolve_workers(w: Option<usize>) -> usize {
    w.filter(|&w| w > 0).unwrap_or_else(|| std::thread::available_parallelism().map(usize::from).unwrap_or(1))
}

fn validate_resolution(r: f64) -> Result<(), Failure> {
    if r > 0.0 && r <= 0.5 {
        Ok(())
    } else {
        Err(Failure::Usage(format!("resolution must lie in (0, 0.5], got {r}")))
    }
}

fn envelope(config: &RunConfig, report: Value) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "config": serde_json::to_value(config).expect("config serializes"),
        "report": report,
    })
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("value serializes");
    s.push('\n');
    s
}

fn write_file(path: &Path, contents: &str) -> io::Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    f.write_all(contents.as_bytes())?;
    f.flush()
}

/// Writes the JSON to `--out` when given; prints JSON or the text summary to
/// standard output according to `--format`.
fn emit(output: &OutputArgs, doc: &Value, summary: &str) -> Result<(), Failure> {
    let text = json_text(doc);
    if let Some(path) = &output.out {
        write_file(path, &text)?;
    }
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    match output.format {
        Format::Json => lock.write_all(text.as_bytes())?,
        _ => lock.write_all(summary.as_bytes())?,
    }
    Ok(())
}

fn csv_sink(out: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn verify_config(run: &RunArgs) -> VerifyConfig {
    VerifyConfig {
        resolution: run.resolution,
        seed: run.seed,
        workers: resolve_workers(run.workers),
        mc_samples: run.samples,
        ..VerifyConfig::default()
    }
}

fn run(command: Command) -> CliResult {
    match command {
        Command::Moment { p, corr, cov } => cmd_moment(&p, corr.as_deref(), cov.as_deref()),
        Command::Phi { p, format } => cmd_phi(&p, format),
        Command::Verify { p, run, output } => cmd_verify(&p, &run, &output),
        Command::Identities { p, output } => cmd_identities(&p, &output),
        Command::Chain { p, run, output } => cmd_chain(&p, &run, &output),
        Command::Scan { p, resolution, workers, out } => cmd_scan(&p, resolution, workers, &out),
        Command::Alltwos { n, count, seed, output } => cmd_alltwos(n, count, seed, &output),
        Command::Grid { resolution, out } => cmd_grid(resolution, &out),
        Command::Sample { count, seed, out } => cmd_sample(count, seed, &out),
    }
}

fn cmd_moment(p: &str, corr: Option<&str>, cov: Option<&str>) -> CliResult {
    let k = parse_exponents(p)?;
    let n = k.len();
    let matrix = match (corr, cov) {
        (Some(c), None) => CovarianceMatrix::from_correlations(n, &parse_rationals(c)?)?,
        (None, Some(c)) => CovarianceMatrix::new(n, parse_rationals(c)?)?,
        (None, None) => CovarianceMatrix::identity(n),
        (Some(_), Some(_)) => return Err(Failure::Usage("give either --corr or --cov".into())),
    };
    let value = moment(&matrix, &k)?;
    println!("{}", rational_to_string(&value));
    println!("{}", f64::from_rational(&value));
    Ok(true)
}

fn cmd_phi(p: &str, format: Format) -> CliResult {
    let k = parse_exponents(p)?;
    let phi = phi_polynomial(&k)?;
    match format {
        Format::Json => print!("{}", json_text(&phi.to_json())),
        _ => println!("{phi}"),
    }
    Ok(true)
}

fn cmd_verify(p: &str, run: &RunArgs, output: &OutputArgs) -> CliResult {
    let k = parse_exponents(p)?;
    validate_even_triple(&k)?;
    validate_resolution(run.resolution)?;
    let started = Instant::now();
    let report = verify_gpi3(&k, &verify_config(run))?;
    let config = RunConfig {
        subcommand: "verify".into(),
        exponents: Some(k.to_string()),
        resolution: Some(run.resolution),
        samples: Some(run.samples),
        seed: Some(run.seed),
        ..RunConfig::default()
    };
    let summary = format!("{}  elapsed: {:.2?}\n", report.text_summary(), started.elapsed());
    emit(output, &envelope(&config, report.to_json()), &summary)?;
    Ok(report.verdict.is_pass())
}

fn cmd_identities(p: &str, output: &OutputArgs) -> CliResult {
    let k = parse_exponents(p)?;
    validate_even_triple(&k)?;
    let suites = [check_derivative_identity(&k)?, check_stein_reduction(&k)?, check_edge_reduction(&k)?];
    let passed = suites.iter().all(|s| s.passed);
    let mut summary = String::new();
    for s in &suites {
        summary.push_str(&format!(
            "[{}] {} ({} checks)\n",
            if s.passed { "PASS" } else { "FAIL" },
            s.suite,
            s.checks.len()
        ));
        for c in s.checks.iter().filter(|c| !c.passed) {
            summary.push_str(&format!("    {} residual: {}\n", c.name, c.residual));
        }
    }
    summary.push_str(&format!("verdict: {}\n", if passed { "PASS" } else { "FAIL" }));
    let config = RunConfig { subcommand: "identities".into(), exponents: Some(k.to_string()), ..RunConfig::default() };
    let report = json!({
        "derivative": suites[0],
        "stein_reduction": suites[1],
        "edge_reduction": suites[2],
        "verdict": if passed { "PASS" } else { "FAIL" },
    });
    emit(output, &envelope(&config, report), &summary)?;
    Ok(passed)
}

fn cmd_chain(p: &str, run: &RunArgs, output: &OutputArgs) -> CliResult {
    let k = parse_exponents(p)?;
    validate_even_triple(&k)?;
    validate_resolution(run.resolution)?;
    let report = induction_chain(&k, &verify_config(run))?;
    let config = RunConfig {
        subcommand: "chain".into(),
        exponents: Some(k.to_string()),
        resolution: Some(run.resolution),
        samples: Some(run.samples),
        seed: Some(run.seed),
        ..RunConfig::default()
    };
    let doc = envelope(&config, serde_json::to_value(&report).expect("chain serializes"));
    emit(output, &doc, &report.text_summary())?;
    Ok(report.passed)
}

fn cmd_scan(p: &str, resolution: f64, workers: Option<usize>, out: &Option<PathBuf>) -> CliResult {
    let k = parse_exponents(p)?;
    validate_even_triple(&k)?;
    validate_resolution(resolution)?;
    let model = PhiModel::new(&k)?;
    let rows = grid_scan_rows(&model, resolution, resolve_workers(workers))?;
    let mut sink = csv_sink(out)?;
    write_scan_csv(&mut sink, &rows)?;
    sink.flush()?;
    Ok(true)
}

fn cmd_alltwos(n: usize, count: usize, seed: u64, output: &OutputArgs) -> CliResult {
    let result = check_all_twos(n, count, seed)?;
    let summary = format!(
        "[{}] all-twos n={} count={} seed={}: min ratio {}, {} equality case(s), {} violation(s)\n",
        if result.passed { "PASS" } else { "FAIL" },
        n,
        count,
        seed,
        result.min_ratio,
        result.equality_cases,
        result.violations
    );
    let config = RunConfig {
        subcommand: "alltwos".into(),
        n: Some(n),
        count: Some(count),
        seed: Some(seed),
        ..RunConfig::default()
    };
    emit(output, &envelope(&config, serde_json::to_value(&result).expect("serializes")), &summary)?;
    Ok(result.passed)
}

fn cmd_grid(resolution: f64, out: &Option<PathBuf>) -> CliResult {
    let grid = Grid::new(resolution)?;
    let mut sink = csv_sink(out)?;
    write_points_csv(&mut sink, grid.points().map(|g| (g.point, g.det, g.region)))?;
    sink.flush()?;
    Ok(true)
}

fn cmd_sample(count: usize, seed: u64, out: &Option<PathBuf>) -> CliResult {
    let mut sink = csv_sink(out)?;
    write_points_csv(
        &mut sink,
        sample_elliptope(count, seed).into_iter().map(|p| {
            let det = det3(&p);
            let region = p.classify();
            (p, det, region)
        }),
    )?;
    sink.flush()?;
    Ok(true)
}
