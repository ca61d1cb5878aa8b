use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use iou_core::density::{log_density_w, log_stationary_density, log_transition_density, StateVector};
use iou_core::exact::{self, ExactMatrix};
use iou_core::sampling::PathSampler;
use iou_core::spectral::cross_correlation;
use serde::Serialize;

use crate::formats::{self, CorrelationRecord, FormatError, MatrixRecord, PathRecord, Process};
use crate::verify::{self, Suite, VerifyConfig};

/// Environment variable naming the directory that relative `--out` paths
/// are resolved against.
pub const OUT_DIR_ENV: &str = "IOU_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "iou", version, about = "Integrated Brownian motion and its stationary transform")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dump an exact matrix with "num/den" entries.
    Matrices(MatricesArgs),
    /// Evaluate a log density and its exponential.
    Density(DensityArgs),
    /// Cross-correlations of the stationary process.
    Correlate(CorrelateArgs),
    /// Sample one path of W or X.
    Sample(SampleArgs),
    /// Run the self-check suites and report.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Gamma,
    B,
    A,
    AInverse,
    Lambda,
    Rho,
    RhoInverse,
}

impl Which {
    fn name(self) -> &'static str {
        match self {
            Which::Gamma => "gamma",
            Which::B => "b",
            Which::A => "a",
            Which::AInverse => "a_inverse",
            Which::Lambda => "lambda",
            Which::Rho => "rho",
            Which::RhoInverse => "rho_inverse",
        }
    }

    fn realize(self, dim: usize) -> ExactMatrix {
        match self {
            Which::Gamma => exact::gamma_matrix(dim),
            Which::B => exact::b_matrix(dim),
            Which::A => exact::a_matrix(dim),
            Which::AInverse => exact::a_inverse_matrix(dim),
            Which::Lambda => exact::lambda_matrix(dim),
            Which::Rho => exact::rho_matrix(dim),
            Which::RhoInverse => exact::rho_inverse_matrix(dim),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Output {
    /// Output file; relative paths resolve against $IOU_OUT_DIR when set.
    /// Standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct MatricesArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum)]
    pub which: Which,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[arg(long)]
    pub n: usize,
    /// Elapsed time; omit with --x.
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<f64>,
    /// Point for the density of W(t), comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "x")]
    pub w: Option<Vec<f64>>,
    /// Starting point; turns --w into a transition density.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "w")]
    pub a: Option<Vec<f64>>,
    /// Point for the stationary density of X.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Option<Vec<f64>>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    /// Highest component; all pairs j, k <= n are reported.
    #[arg(long)]
    pub n: u32,
    #[arg(long, default_value_t = 4.0)]
    pub tau_max: f64,
    /// Number of lags on [-tau_max, tau_max].
    #[arg(long, default_value_t = 81)]
    pub count: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub n: usize,
    /// Explicit sample times, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with_all = ["t", "count"])]
    pub times: Option<Vec<f64>>,
    /// Final time of a uniform grid t/count, 2t/count, ..., t.
    #[arg(long, requires = "count", allow_hyphen_values = true)]
    pub t: Option<f64>,
    #[arg(long, requires = "t")]
    pub count: Option<usize>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Process::W)]
    pub process: Process,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Suite::All)]
    pub suite: Suite,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 100_000)]
    pub paths: u64,
    #[arg(long, default_value_t = 1024)]
    pub grid: usize,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [0.5, 1.0, 2.0])]
    pub theta: Vec<f64>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Domain(#[from] iou_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("verification failed")]
    VerifyFailed,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::VerifyFailed => 1,
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 3,
            CliError::Io { .. } | CliError::Format(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::VerifyFailed => "verify",
            CliError::Usage(_) => "usage",
            CliError::Domain(_) => "domain",
            CliError::Io { .. } | CliError::Format(_) => "io",
        }
    }

    /// Single-line JSON for stderr.
    pub fn to_json_line(&self) -> String {
        serde_json::json!({ "error": self.kind(), "message": self.to_string() }).to_string()
    }
}

/// Executes one command, writing its artifact to `--out` or standard output.
pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Matrices(args) => {
            let m = args.which.realize(args.n);
            let text = match args.output.format.unwrap_or(Format::Json) {
                Format::Json => formats::to_json(&MatrixRecord::new(args.which.name(), &m))?,
                Format::Csv => formats::matrix_csv(&m)?,
            };
            emit(&args.output, &text)
        }
        Command::Density(args) => {
            let text = density(&args)?;
            emit(&args.output, &text)
        }
        Command::Correlate(args) => {
            let text = correlate(&args)?;
            emit(&args.output, &text)
        }
        Command::Sample(args) => {
            let text = sample(&args)?;
            emit(&args.output, &text)
        }
        Command::Verify(args) => {
            let config = VerifyConfig {
                seed: args.seed,
                paths: args.paths,
                grid: args.grid,
                thetas: args.theta.clone(),
            };
            let report = verify::run(args.suite, &config)?;
            let text = match args.output.format.unwrap_or(Format::Json) {
                Format::Json => formats::to_json(&report)?,
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    for c in &report.results {
                        w.serialize(c).map_err(FormatError::from)?;
                    }
                    String::from_utf8(w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?)
                        .expect("csv output is utf-8")
                }
            };
            emit(&args.output, &text)?;
            if report.pass {
                Ok(())
            } else {
                Err(CliError::VerifyFailed)
            }
        }
    }
}

fn state(values: &[f64], order: usize, flag: &str) -> Result<StateVector, CliError> {
    if values.len() != order + 1 {
        return Err(CliError::Usage(format!(
            "--{flag} has {} components, --n {order} needs {}",
            values.len(),
            order + 1
        )));
    }
    Ok(StateVector::new(values.to_vec())?)
}

#[derive(Serialize)]
struct DensityRecord {
    kind: &'static str,
    n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    t: Option<f64>,
    log_density: f64,
    density: f64,
}

fn density(args: &DensityArgs) -> Result<String, CliError> {
    let (kind, log_density) = match (&args.w, &args.a, &args.x) {
        (Some(w), None, None) => {
            let t = args.t.ok_or_else(|| CliError::Usage("--w needs --t".into()))?;
            ("w", log_density_w(&state(w, args.n, "w")?, t)?)
        }
        (Some(w), Some(a), None) => {
            let t = args.t.ok_or_else(|| CliError::Usage("--w needs --t".into()))?;
            ("transition", log_transition_density(&state(w, args.n, "w")?, &state(a, args.n, "a")?, t)?)
        }
        (None, None, Some(x)) => ("stationary", log_stationary_density(&state(x, args.n, "x")?)),
        _ => return Err(CliError::Usage("give exactly one of --w (optionally with --a) or --x".into())),
    };
    let record = DensityRecord {
        kind,
        n: args.n,
        t: if kind == "stationary" { None } else { args.t },
        log_density,
        density: log_density.exp(),
    };
    match args.output.format.unwrap_or(Format::Json) {
        Format::Json => Ok(formats::to_json(&record)?),
        Format::Csv => Ok(format!(
            "kind,n,log_density,density\n{},{},{},{}\n",
            kind,
            args.n,
            formats::fmt_f64(log_density),
            formats::fmt_f64(record.density)
        )),
    }
}

/// `count` evenly spaced lags from `-tau_max` to `tau_max`.
pub fn lag_grid(tau_max: f64, count: usize) -> Result<Vec<f64>, CliError> {
    if !(tau_max > 0.0 && tau_max.is_finite()) || count < 2 {
        return Err(CliError::Usage("--tau-max must be positive and --count at least 2".into()));
    }
    let step = 2.0 * tau_max / (count - 1) as f64;
    Ok((0..count).map(|i| -tau_max + step * i as f64).collect())
}

fn correlate(args: &CorrelateArgs) -> Result<String, CliError> {
    let pairs: Vec<_> = (0..=args.n)
        .flat_map(|j| (0..=args.n).map(move |k| cross_correlation(j, k)))
        .collect();
    match args.output.format.unwrap_or(Format::Csv) {
        Format::Csv => Ok(formats::correlation_csv(&lag_grid(args.tau_max, args.count)?, &pairs)?),
        Format::Json => {
            let records: Vec<_> = pairs.iter().map(CorrelationRecord::new).collect();
            Ok(formats::to_json(&records)?)
        }
    }
}

/// Sample times from either `--times` or `--t` with `--count`.
pub fn sample_times(args: &SampleArgs) -> Result<Vec<f64>, CliError> {
    match (&args.times, args.t, args.count) {
        (Some(times), None, None) => Ok(times.clone()),
        (None, Some(t), Some(count)) if count > 0 => Ok((1..=count).map(|i| t * i as f64 / count as f64).collect()),
        (None, Some(_), Some(_)) => Err(CliError::Usage("--count must be positive".into())),
        _ => Err(CliError::Usage("give --times or both --t and --count".into())),
    }
}

fn sample(args: &SampleArgs) -> Result<String, CliError> {
    let times = sample_times(args)?;
    let sampler = PathSampler::new(args.n);
    let path = match args.process {
        Process::W => sampler.sample_w(&times, args.seed)?,
        Process::X => sampler.sample_x(&times, args.seed)?,
    };
    match args.output.format.unwrap_or(Format::Csv) {
        Format::Csv => Ok(formats::path_csv(&path, args.process)?),
        Format::Json => Ok(formats::to_json(&PathRecord::new(&path, args.process))?),
    }
}

/// Resolves `--out` against the output directory variable.
pub fn resolve_out(out: &Path, out_dir: Option<&Path>) -> PathBuf {
    match out_dir {
        Some(dir) if out.is_relative() => dir.join(out),
        _ => out.to_path_buf(),
    }
}

fn emit(output: &Output, text: &str) -> Result<(), CliError> {
    let Some(out) = &output.out else {
        print!("{text}");
        return Ok(());
    };
    let dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
    let path = resolve_out(out, dir.as_deref());
    let io = |source| CliError::Io {
        path: path.display().to_string(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    std::fs::write(&path, text).map_err(io)
}
