//! Argument parsing and dispatch for the `gsimplex` binary.
//!
//! ```text
//! gsimplex moments --d 2 --l 2 --sigmas 1,1,1 --p 1,2
//! gsimplex density --d 4 --l 2 --sigmas 1,2,3 --format csv --output density.csv
//! gsimplex sample  --d 3 --l 2 --sigmas 1,2,3 --n 1000 --seed 7
//! gsimplex verify theorem1 --d 3 --l 2 --sigmas 0.5,1,2 --n 200000 --seed 42 --format json
//! gsimplex verify {origin|projection|grassmannian} ...
//! gsimplex report
//! ```
//!
//! `--sigmas` is a comma separated list of `l + 1` positive weights; when
//! `--l` is omitted it is inferred from the count, otherwise the two are
//! cross-checked. Without `--sigmas` all weights are 1. `--origin` switches
//! `moments`, `density` and `sample` to the simplex `conv(0, X_1, ..., X_l)`.
//! Defaults: `--n 100000`, `--seed 0`, `--p 1,2`, `--workers 1`. The output
//! of every command depends only on its flags; `--workers` changes speed,
//! not results.
//!
//! # Exit codes
//!
//! `0` success, `1` some verification statistic violated its threshold,
//! `2` usage, domain or I/O error (message on stderr).
//!
//! # Output schemas
//!
//! Artifacts go to stdout, or to `--output PATH` (written to a temporary
//! file in the same directory, then renamed). Reals in CSV are written with
//! 17 significant digits in `1.2345678901234567e0` form.
//!
//! * `moments`: CSV `p,moment`; JSON `{"law": {"coefficient", "dofs"},
//!   "moments": [{"p", "moment"}]}`; text `E[V^p] = value` lines.
//! * `density`: CSV `x,pdf,cdf`; JSON `{"spec": {"coefficient", "dofs"},
//!   "grid": [..], "pdf": [..], "cdf": [..], "tolerance"}`; text summary.
//! * `sample`: CSV with `# key=value` header lines (experiment, seed,
//!   base_stream, chunk_size, n) then a `value` column; JSON
//!   `{"values": [..], "meta": {..}}`; text summary.
//! * `verify`: JSON `{"experiment", "parameters": {"d", "l", "sigmas", "n",
//!   "seed"}, "law", "statistics": [{"name", "value", "threshold",
//!   "relation", "pass"}], "p_values": [{"test", "p"}], "notes",
//!   "runtime_seconds"}`; CSV `name,value,threshold,relation,pass`; text
//!   table. `runtime_seconds` is `null` unless `--timing` is given, so that
//!   repeated runs are byte-identical.
//! * `report`: runs the seeded acceptance experiments; JSON array of
//!   reports, CSV with a leading `experiment` column, or text tables.

use crate::distributions::{chiprod_density, chiprod_moment, spec_from_theorem1, spec_with_origin, weighted_volume_moment, ChiProductSpec, DEFAULT_GRID_SIZE, DEFAULT_RANGE_QUANTILES};
use crate::geometry::WeightVector;
use crate::sampling::{sample_origin_simplex_volumes, sample_weighted_simplex_volumes, RandomStream};
use crate::verification::{self, VerificationReport, STREAM_PRIMARY};
use crate::{Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::fmt::{self, Write as _};
use std::io::Write;
use std::path::{Path, PathBuf};

pub const DEFAULT_N: usize = 100_000;
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    Theorem1,
    Origin,
    Projection,
    Grassmannian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Moments,
    Density,
    Sample,
    Verify(Experiment),
    Report,
}

/// A fully validated invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub d: Option<usize>,
    pub l: Option<usize>,
    pub sigmas: Option<Vec<f64>>,
    pub origin: bool,
    pub n: usize,
    pub seed: u64,
    pub p_list: Vec<f64>,
    pub output_path: Option<PathBuf>,
    pub format: Format,
    pub workers: usize,
    pub timing: bool,
    pub grid_size: usize,
    pub range_quantiles: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UsageErrorKind {
    /// Malformed, unknown or missing flags.
    Usage,
    /// Well-formed flags whose values violate a precondition.
    Domain,
    /// `--help` or `--version`; the message is the text to print.
    Help,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageError {
    pub kind: UsageErrorKind,
    pub message: String,
}

impl UsageError {
    fn usage(message: impl Into<String>) -> Self {
        Self { kind: UsageErrorKind::Usage, message: message.into() }
    }

    fn domain(message: impl Into<String>) -> Self {
        Self { kind: UsageErrorKind::Domain, message: message.into() }
    }
}

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser, Debug)]
#[command(name = "gsimplex", version, about = "Exact laws and Monte Carlo checks for volumes of weighted Gaussian simplices")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Exact moments E[V^p] of the simplex volume.
    Moments(CommonArgs),
    /// Tabulated density and CDF of the volume law.
    Density(CommonArgs),
    /// Seeded Monte Carlo sample of simplex volumes.
    Sample(CommonArgs),
    /// Run one seeded verification experiment.
    Verify {
        #[arg(value_enum)]
        experiment: Experiment,
        #[command(flatten)]
        args: CommonArgs,
    },
    /// Run the seeded acceptance experiments.
    Report(CommonArgs),
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// Ambient dimension.
    #[arg(long)]
    d: Option<usize>,
    /// Simplex dimension (number of vertices minus one).
    #[arg(long)]
    l: Option<usize>,
    /// Comma separated vertex weights s_0,...,s_l.
    #[arg(long, allow_hyphen_values = true)]
    sigmas: Option<String>,
    /// Use the simplex conv(0, X_1, ..., X_l) instead of a weighted one.
    #[arg(long)]
    origin: bool,
    /// Sample size.
    #[arg(long, default_value_t = DEFAULT_N)]
    n: usize,
    /// Random seed.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Comma separated moment orders.
    #[arg(long, allow_hyphen_values = true)]
    p: Option<String>,
    /// Write the artifact here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Sampling threads; results do not depend on it.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Record wall-clock time in verification reports.
    #[arg(long)]
    timing: bool,
    /// Number of density grid points.
    #[arg(long, default_value_t = DEFAULT_GRID_SIZE)]
    grid_size: usize,
    /// Lower quantile of the density range.
    #[arg(long, default_value_t = DEFAULT_RANGE_QUANTILES.0)]
    q_lo: f64,
    /// Upper quantile of the density range.
    #[arg(long, default_value_t = DEFAULT_RANGE_QUANTILES.1)]
    q_hi: f64,
}

fn parse_list(flag: &str, text: &str) -> std::result::Result<Vec<f64>, UsageError> {
    text.split(',')
        .map(|s| {
            let s = s.trim();
            match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(UsageError::usage(format!("invalid value '{s}' in {flag}: expected a comma separated list of finite numbers"))),
            }
        })
        .collect()
}

/// Parses `argv` (without the program name) into a validated [`RunConfig`].
pub fn parse_args<S: AsRef<str>>(argv: &[S]) -> std::result::Result<RunConfig, UsageError> {
    let full = std::iter::once("gsimplex").chain(argv.iter().map(|s| s.as_ref()));
    let cli = Cli::try_parse_from(full).map_err(|e| {
        let kind = match e.kind() {
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => UsageErrorKind::Help,
            _ => UsageErrorKind::Usage,
        };
        UsageError { kind, message: e.render().to_string() }
    })?;
    let (command, a) = match cli.command {
        Sub::Moments(a) => (Command::Moments, a),
        Sub::Density(a) => (Command::Density, a),
        Sub::Sample(a) => (Command::Sample, a),
        Sub::Verify { experiment, args } => (Command::Verify(experiment), args),
        Sub::Report(a) => (Command::Report, a),
    };

    let sigmas = match &a.sigmas {
        Some(text) => {
            let s = parse_list("--sigmas", text)?;
            let w = WeightVector::new(s.clone()).map_err(|e| UsageError::domain(e.to_string()))?;
            Some(w.as_slice().to_vec())
        }
        None => None,
    };
    let p_list = match &a.p {
        Some(text) => parse_list("--p", text)?,
        None => vec![1.0, 2.0],
    };
    let format = a.format.unwrap_or(match command {
        Command::Density | Command::Sample => Format::Csv,
        _ => Format::Text,
    });

    let mut config = RunConfig {
        command,
        d: a.d,
        l: a.l,
        sigmas,
        origin: a.origin,
        n: a.n,
        seed: a.seed,
        p_list,
        output_path: a.output,
        format,
        workers: a.workers,
        timing: a.timing,
        grid_size: a.grid_size,
        range_quantiles: (a.q_lo, a.q_hi),
    };
    validate(&mut config)?;
    Ok(config)
}

fn validate(c: &mut RunConfig) -> std::result::Result<(), UsageError> {
    if c.workers == 0 {
        return Err(UsageError::domain("--workers must be at least 1"));
    }
    if c.command == Command::Report {
        return Ok(());
    }
    let Some(d) = c.d else {
        return Err(UsageError::usage("missing required flag --d"));
    };
    if let Some(s) = &c.sigmas {
        let implied = s.len() - 1;
        match c.l {
            Some(l) if l != implied => {
                return Err(UsageError::domain(format!("--sigmas has {} values but --l {l} needs {}", s.len(), l + 1)));
            }
            _ => c.l = Some(implied),
        }
    }
    let Some(l) = c.l else {
        return Err(UsageError::usage("missing required flag --l (or --sigmas)"));
    };
    if d == 0 {
        return Err(UsageError::domain("d must be at least 1"));
    }
    if l == 0 {
        return Err(UsageError::domain("l must be at least 1"));
    }
    if l > d {
        return Err(UsageError::domain("l must satisfy l ≤ d"));
    }
    let weighted = matches!(c.command, Command::Verify(Experiment::Theorem1) | Command::Verify(Experiment::Grassmannian));
    let plain = matches!(c.command, Command::Moments | Command::Density | Command::Sample);
    if c.origin && !plain {
        return Err(UsageError::usage("--origin only applies to moments, density and sample"));
    }
    if c.sigmas.is_some() && (c.origin || !(weighted || plain)) {
        return Err(UsageError::usage("--sigmas does not apply to this command"));
    }
    if matches!(c.command, Command::Verify(Experiment::Projection | Experiment::Grassmannian)) && l >= d {
        return Err(UsageError::domain("l must satisfy l < d for this experiment"));
    }
    if matches!(c.command, Command::Sample | Command::Verify(_)) && c.n == 0 {
        return Err(UsageError::domain("--n must be at least 1"));
    }
    if c.command == Command::Density {
        let (lo, hi) = c.range_quantiles;
        if c.grid_size < 64 {
            return Err(UsageError::domain("--grid-size must be at least 64"));
        }
        if !(0.0 < lo && lo < hi && hi < 1.0) {
            return Err(UsageError::domain("quantiles must satisfy 0 < --q-lo < --q-hi < 1"));
        }
    }
    Ok(())
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// An argument list that parses back to `self`.
    pub fn to_argv(&self) -> Vec<String> {
        let mut v: Vec<String> = match self.command {
            Command::Moments => vec!["moments".into()],
            Command::Density => vec!["density".into()],
            Command::Sample => vec!["sample".into()],
            Command::Report => vec!["report".into()],
            Command::Verify(e) => vec!["verify".into(), e.to_possible_value().expect("no skipped variants").get_name().into()],
        };
        let mut flag = |name: &str, value: String| {
            v.push(format!("--{name}"));
            v.push(value);
        };
        if let Some(d) = self.d {
            flag("d", d.to_string());
        }
        if let Some(l) = self.l {
            flag("l", l.to_string());
        }
        if let Some(s) = &self.sigmas {
            flag("sigmas", join(s));
        }
        flag("n", self.n.to_string());
        flag("seed", self.seed.to_string());
        flag("p", join(&self.p_list));
        if let Some(o) = &self.output_path {
            flag("output", o.display().to_string());
        }
        flag("format", self.format.to_possible_value().expect("no skipped variants").get_name().into());
        flag("workers", self.workers.to_string());
        flag("grid-size", self.grid_size.to_string());
        flag("q-lo", self.range_quantiles.0.to_string());
        flag("q-hi", self.range_quantiles.1.to_string());
        if self.origin {
            v.push("--origin".into());
        }
        if self.timing {
            v.push("--timing".into());
        }
        v
    }

    fn dims(&self) -> (usize, usize) {
        (self.d.expect("validated"), self.l.expect("validated"))
    }

    fn weights(&self) -> Result<WeightVector> {
        match &self.sigmas {
            Some(s) => WeightVector::new(s.clone()),
            None => Ok(WeightVector::ones(self.dims().1)),
        }
    }

    fn law(&self) -> Result<ChiProductSpec> {
        let (d, l) = self.dims();
        if self.origin {
            spec_with_origin(d, l)
        } else {
            spec_from_theorem1(d, l, &self.weights()?)
        }
    }
}

/// What a command produced: the bytes of its artifact and whether every
/// verification threshold held.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub bytes: Vec<u8>,
    pub passed: bool,
}

impl Artifact {
    fn ok(bytes: Vec<u8>) -> Self {
        Self { bytes, passed: true }
    }
}

#[derive(Serialize)]
struct MomentRow {
    p: f64,
    moment: f64,
}

#[derive(Serialize)]
struct MomentTable<'a> {
    law: &'a ChiProductSpec,
    moments: Vec<MomentRow>,
}

fn json_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn report_csv(out: &mut String, prefix: Option<&str>, r: &VerificationReport) {
    for s in &r.statistics {
        if let Some(p) = prefix {
            let _ = write!(out, "{p},");
        }
        let relation = match s.relation {
            verification::Relation::AtMost => "at_most",
            verification::Relation::AtLeast => "at_least",
        };
        let _ = writeln!(out, "{},{:.16e},{:.16e},{relation},{}", s.name, s.value, s.threshold, s.pass);
    }
}

fn render_reports(config: &RunConfig, mut reports: Vec<VerificationReport>, single: bool) -> Result<Artifact> {
    if !config.timing {
        for r in &mut reports {
            r.runtime_seconds = None;
        }
    }
    let passed = reports.iter().all(VerificationReport::passed);
    let bytes = match config.format {
        Format::Json if single => json_bytes(&reports[0])?,
        Format::Json => json_bytes(&reports)?,
        Format::Csv => {
            let mut out = String::from(if single { "" } else { "experiment," });
            out.push_str("name,value,threshold,relation,pass\n");
            for r in &reports {
                report_csv(&mut out, (!single).then_some(r.experiment.as_str()), r);
            }
            out.into_bytes()
        }
        Format::Text => {
            let mut out = reports.iter().map(|r| r.to_string()).collect::<Vec<_>>().join("\n\n");
            if !single {
                let _ = write!(out, "\n\nsuite: {}", if passed { "PASS" } else { "FAIL" });
            }
            out.push('\n');
            out.into_bytes()
        }
    };
    Ok(Artifact { bytes, passed })
}

/// Runs the command described by `config` and returns its artifact.
pub fn execute(config: &RunConfig) -> Result<Artifact> {
    match config.command {
        Command::Moments => {
            let law = config.law()?;
            let (d, l) = config.dims();
            let w = config.weights()?;
            let moments = config
                .p_list
                .iter()
                .map(|&p| {
                    let moment = if config.origin { chiprod_moment(&law, p)? } else { weighted_volume_moment(d, l, &w, p)? };
                    Ok(MomentRow { p, moment })
                })
                .collect::<Result<Vec<_>>>()?;
            let bytes = match config.format {
                Format::Json => json_bytes(&MomentTable { law: &law, moments })?,
                Format::Csv => {
                    let mut out = String::from("p,moment\n");
                    for m in &moments {
                        let _ = writeln!(out, "{:.16e},{:.16e}", m.p, m.moment);
                    }
                    out.into_bytes()
                }
                Format::Text => {
                    let mut out = String::new();
                    for m in &moments {
                        let _ = writeln!(out, "E[V^{}] = {}", m.p, m.moment);
                    }
                    out.into_bytes()
                }
            };
            Ok(Artifact::ok(bytes))
        }
        Command::Density => {
            let law = config.law()?;
            let grid = chiprod_density(&law, config.grid_size, config.range_quantiles)?;
            let bytes = match config.format {
                Format::Json => json_bytes(&grid)?,
                Format::Csv => {
                    let mut out = Vec::new();
                    grid.write_csv(&mut out)?;
                    out
                }
                Format::Text => format!(
                    "law: {} * chi{:?}\ngrid: {} points on [{:.6e}, {:.6e}]\nmass: {:.12}\ntolerance: {:.3e}\n",
                    law.coefficient(),
                    law.dofs(),
                    grid.len(),
                    grid.grid[0],
                    grid.grid[grid.len() - 1],
                    grid.mass(),
                    grid.tolerance
                )
                .into_bytes(),
            };
            Ok(Artifact::ok(bytes))
        }
        Command::Sample => {
            let (d, l) = config.dims();
            let rs = RandomStream::new(config.seed, STREAM_PRIMARY);
            let sample = if config.origin {
                sample_origin_simplex_volumes(d, l, config.n, &rs, config.workers)?
            } else {
                sample_weighted_simplex_volumes(d, l, &config.weights()?, config.n, &rs, config.workers)?
            };
            let bytes = match config.format {
                Format::Json => json_bytes(&sample)?,
                Format::Csv => {
                    let mut out = Vec::new();
                    sample.write_csv(&mut out)?;
                    out
                }
                Format::Text => {
                    let n = sample.len() as f64;
                    let mean = sample.values.iter().sum::<f64>() / n;
                    let min = sample.values.iter().copied().fold(f64::INFINITY, f64::min);
                    let max = sample.values.iter().copied().fold(0.0, f64::max);
                    format!("{}\nn: {}\nseed: {}\nmean: {mean}\nmin: {min}\nmax: {max}\n", sample.meta.experiment, sample.len(), config.seed).into_bytes()
                }
            };
            Ok(Artifact::ok(bytes))
        }
        Command::Verify(e) => {
            let (d, l) = config.dims();
            let (n, seed, workers) = (config.n, config.seed, config.workers);
            let report = match e {
                Experiment::Theorem1 => verification::verify_theorem1(d, l, &config.weights()?, n, seed, workers)?,
                Experiment::Origin => verification::verify_with_origin(d, l, n, seed, workers)?,
                Experiment::Projection => verification::verify_projection_identity(d, l, n, seed, workers)?,
                Experiment::Grassmannian => verification::verify_grassmannian_lemma(d, l, &config.weights()?, n, seed, workers)?,
            };
            render_reports(config, vec![report], true)
        }
        Command::Report => render_reports(config, verification::standard_suite(config.workers)?, false),
    }
}

/// Writes `bytes` to `path` through a temporary sibling file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let name = path.file_name().ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidInput, "output path has no file name"))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}

/// Runs `config`, writing its artifact; returns the process exit code.
pub fn run(config: &RunConfig) -> i32 {
    let outcome = execute(config).and_then(|a| {
        match &config.output_path {
            Some(p) => write_atomic(p, &a.bytes)?,
            None => std::io::stdout().lock().write_all(&a.bytes)?,
        }
        Ok(a.passed)
    });
    match outcome {
        Ok(true) => 0,
        Ok(false) => {
            eprintln!("verification failed: at least one statistic violated its threshold");
            1
        }
        Err(e) => {
            report_error(&e);
            2
        }
    }
}

fn report_error(e: &Error) {
    eprintln!("error: {e}");
    if let Error::Numerical { diagnostics, .. } = e {
        for (k, v) in diagnostics {
            eprintln!("  {k} = {v}");
        }
    }
}

/// Entry point of the binary: parse, run, return the exit code.
pub fn main_with_args<S: AsRef<str>>(argv: &[S]) -> i32 {
    match parse_args(argv) {
        Ok(config) => run(&config),
        Err(e) if e.kind == UsageErrorKind::Help => {
            print!("{}", e.message);
            0
        }
        Err(e) => {
            let msg = e.message.trim_end();
            let msg = msg.strip_prefix("error: ").unwrap_or(msg);
            eprintln!("error: {msg}\n\nUsage: gsimplex <moments|density|sample|verify|report> [OPTIONS]\nRun `gsimplex --help` for details.");
            2
        }
    }
}
