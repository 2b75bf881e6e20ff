//! Command-line front end: argument types, sweep configuration, row
//! formatting and the five subcommands.
//!
//! Every subcommand produces a list of [`Row`]s that are written as CSV
//! (RFC 4180 quoting, floats with 17 significant digits) or as a JSON array
//! of objects with the same field names.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::error::Error;
use crate::gaussian::CorrelationStructure;
use crate::monte_carlo::{estimate_tail_is, estimate_tail_naive, index_coincidence, McSettings, Method};
use crate::oracle::{
    error_term_bound, exact_max_tail_checked, exists_single_index_tail, sharp_ratio_detailed, union_sum, SampleSize,
    ScalingSequence,
};
use crate::rate::{rate_i, rate_j, regime_classify, sharp_constants, Scale, Threshold};
use crate::verify::{criterion_id, run_criterion, VerifyOptions, CRITERIA};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CRITERION_FAILED: i32 = 1;
    pub const USAGE: i32 = 2;
}

/// A single output cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Str(String),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => fmt_f64(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Str(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Num(x) if x.is_finite() => serde_json::json!(x),
            Cell::Num(x) => serde_json::Value::String(fmt_f64(*x)),
            Cell::Int(i) => serde_json::json!(i),
            Cell::Str(s) => serde_json::Value::String(s.clone()),
            Cell::Bool(b) => serde_json::Value::Bool(*b),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}
impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}
impl From<u8> for Cell {
    fn from(x: u8) -> Self {
        Cell::Int(x as i64)
    }
}
impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Str(s.to_string())
    }
}
impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Str(s)
    }
}
impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}
impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Str(String::new()), Cell::Num)
    }
}

/// Ordered `(column, value)` pairs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Row(pub Vec<(&'static str, Cell)>);

impl Row {
    pub fn new() -> Self {
        Row(Vec::new())
    }

    pub fn with(mut self, key: &'static str, value: impl Into<Cell>) -> Self {
        self.0.push((key, value.into()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&Cell> {
        self.0.iter().find(|(k, _)| *k == key).map(|(_, v)| v)
    }
}

/// Float with 17 significant digits, positional for moderate exponents.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (_, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..17).contains(&exp) {
        return sci;
    }
    let decimals = (16 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleArg {
    Right,
    Large,
}

impl From<ScaleArg> for Scale {
    fn from(s: ScaleArg) -> Scale {
        match s {
            ScaleArg::Right => Scale::Right,
            ScaleArg::Large => Scale::Large,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Naive,
    Is,
}

/// Sweep configuration file: flat `key = value` pairs, all optional.
///
/// ```toml
/// rho_grid = [0.0, 0.5]
/// u_grid = [[2.0, 2.0], [2.0, 1.0]]
/// sigma = [1.0, 1.0]
/// scale = "right"
/// n_values = [3.0, 6.0]    # log10 n
/// a_n_values = [4.0, 8.0]
/// trials = 10000
/// seed = 1
/// output_format = "csv"
/// output_path = "out.csv"
/// ```
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub rho_grid: Option<Vec<f64>>,
    pub u_grid: Option<Vec<(f64, f64)>>,
    pub sigma: Option<(f64, f64)>,
    pub scale: Option<ScaleArg>,
    pub n_values: Option<Vec<f64>>,
    pub a_n_values: Option<Vec<f64>>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub output_format: Option<OutputFormat>,
    pub output_path: Option<PathBuf>,
}

impl SweepConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Domain(#[from] Error),
    #[error("output: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Domain(_) => exit::USAGE,
            CliError::Io(_) => exit::CRITERION_FAILED,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "bivex", version, about = "Tail asymptotics of bivariate Gaussian component-wise maxima")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Sweep configuration file (flags override its values).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rate function J (right scale) or I (large scale) with case and regime.
    Rate(RateArgs),
    /// Sharp constants (b, c, K) and the finite-n sharp ratio.
    Sharp(SharpArgs),
    /// Exact tail, single-index tail and inclusion-exclusion sums.
    Oracle(OracleArgs),
    /// Monte Carlo tail or index-coincidence estimate.
    Mc(McArgs),
    /// Run the verification criteria.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Correlation (repeatable).
    #[arg(long, allow_negative_numbers = true)]
    pub rho: Vec<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub u1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub u2: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct RateArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub sigma1: Option<f64>,
    #[arg(long)]
    pub sigma2: Option<f64>,
    #[arg(long, value_enum)]
    pub scale: Option<ScaleArg>,
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    /// Sample size (repeatable).
    #[arg(long)]
    pub n: Vec<u64>,
    /// Natural log of the sample size, for n beyond 2^64 (repeatable).
    #[arg(long)]
    pub logn: Vec<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SharpArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub sample: SampleArgs,
    /// Level multiplier a_n (repeatable).
    #[arg(long)]
    pub an: Vec<f64>,
    /// Swap u1 and u2 when u2 > u1 instead of failing.
    #[arg(long)]
    pub sort: bool,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub sample: SampleArgs,
    /// Level multiplier a_n (repeatable); default √(log n).
    #[arg(long)]
    pub an: Vec<f64>,
    #[arg(long)]
    pub sort: bool,
}

#[derive(Debug, Clone, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub n: Option<u64>,
    /// Level multiplier; the event is {X̄_n > a_n·u}.
    #[arg(long, default_value_t = 1.0)]
    pub an: f64,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = MethodArg::Is)]
    pub method: MethodArg,
    /// Estimate P(I* ≠ J* | event) instead of the tail.
    #[arg(long)]
    pub coincidence: bool,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Criterion number or alias (repeatable); default all.
    #[arg(long)]
    pub criterion: Vec<String>,
    /// log n for the right-scale checks (the comparison point is 100).
    #[arg(long)]
    pub logn: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Emit one summary row per criterion instead of every check.
    #[arg(long)]
    pub summary: bool,
}

/// Result of a subcommand: rows to print and the exit code.
pub struct Outcome {
    pub rows: Vec<Row>,
    pub code: i32,
}

fn rows_ok(rows: Vec<Row>) -> Outcome {
    Outcome { rows, code: exit::OK }
}

fn thresholds(grid: &GridArgs, config: &SweepConfig) -> Result<Vec<Threshold>, CliError> {
    match (grid.u1, grid.u2) {
        (Some(u1), Some(u2)) => Ok(vec![Threshold::new(u1, u2)]),
        (None, None) => config
            .u_grid
            .as_ref()
            .filter(|g| !g.is_empty())
            .map(|g| g.iter().map(|&(a, b)| Threshold::new(a, b)).collect())
            .ok_or_else(|| CliError::Usage("missing --u1/--u2 (or u_grid in the config)".into())),
        _ => Err(CliError::Usage("--u1 and --u2 must be given together".into())),
    }
}

fn rhos(grid: &GridArgs, config: &SweepConfig) -> Result<Vec<f64>, CliError> {
    if !grid.rho.is_empty() {
        return Ok(grid.rho.clone());
    }
    config
        .rho_grid
        .clone()
        .filter(|g| !g.is_empty())
        .ok_or_else(|| CliError::Usage("missing --rho (or rho_grid in the config)".into()))
}

fn sample_sizes(sample: &SampleArgs, config: &SweepConfig) -> Result<Vec<SampleSize>, CliError> {
    let mut out = Vec::new();
    for &n in &sample.n {
        out.push(SampleSize::new(n)?);
    }
    for &l in &sample.logn {
        out.push(SampleSize::from_log(l)?);
    }
    if out.is_empty() {
        for &l10 in config.n_values.iter().flatten() {
            let n = 10f64.powf(l10);
            out.push(if n <= 1e15 && n.fract() == 0.0 {
                SampleSize::new(n as u64)?
            } else {
                SampleSize::from_log10(l10)?
            });
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage("missing --n/--logn (or n_values in the config)".into()));
    }
    Ok(out)
}

fn fmt_n(n: &SampleSize) -> Cell {
    match n.exact() {
        Some(k) => Cell::Int(k as i64),
        None => Cell::Str(format!("exp({})", fmt_f64(n.log_n()))),
    }
}

/// `rate`: J or I with case label, minimizer and regime.
pub fn cmd_rate(args: &RateArgs, config: &SweepConfig) -> Result<Outcome, CliError> {
    let scale = args.scale.or(config.scale).unwrap_or(ScaleArg::Right);
    let (s1, s2) = match (args.sigma1, args.sigma2, config.sigma) {
        (Some(a), Some(b), _) => (a, b),
        (a, b, Some((c, d))) => (a.unwrap_or(c), b.unwrap_or(d)),
        (a, b, None) => (a.unwrap_or(1.0), b.unwrap_or(1.0)),
    };
    let seed = config.seed.unwrap_or(0);
    let mut rows = Vec::new();
    for rho in rhos(&args.grid, config)? {
        let corr = CorrelationStructure::new(s1, s2, rho)?;
        for u in thresholds(&args.grid, config)? {
            let base = Row::new()
                .with("scale", if scale == ScaleArg::Right { "right" } else { "large" })
                .with("rho", rho)
                .with("sigma1", s1)
                .with("sigma2", s2)
                .with("u1", u.u1)
                .with("u2", u.u2)
                .with("seed", seed);
            let result = match scale {
                ScaleArg::Right => rate_j(u, &corr),
                ScaleArg::Large => rate_i(corr.standardize(u), rho),
            };
            let row = match result {
                Ok(r) => {
                    let regime = regime_classify(u, &corr, scale.into())?;
                    base.with("rate", r.value)
                        .with("case", r.case_label.as_str())
                        .with("x1", r.minimizer.0)
                        .with("x2", r.minimizer.1)
                        .with("regime", regime.as_str())
                        .with("status", "ok")
                }
                // out-of-domain thresholds are skipped; malformed input is an error
                Err(e @ Error::InvalidThreshold(_)) => {
                    let reason = if scale == ScaleArg::Right { "u ≤ √2·σ".to_string() } else { e.to_string() };
                    base.with("rate", Cell::Str(String::new()))
                        .with("case", "")
                        .with("x1", "")
                        .with("x2", "")
                        .with("regime", "")
                        .with("status", format!("skipped: {reason}"))
                }
                Err(e) => return Err(e.into()),
            };
            rows.push(row);
        }
    }
    Ok(rows_ok(rows))
}

fn sorted_or_fail(u: Threshold, sort: bool) -> Result<Threshold, CliError> {
    if u.u2 > u.u1 && !sort {
        return Err(Error::UnsortedThreshold { u1: u.u1, u2: u.u2 }.into());
    }
    Ok(u.sorted())
}

/// `sharp`: constants and finite-n ratio per a_n.
pub fn cmd_sharp(args: &SharpArgs, config: &SweepConfig) -> Result<Outcome, CliError> {
    let ans = if args.an.is_empty() { config.a_n_values.clone().unwrap_or_default() } else { args.an.clone() };
    if ans.is_empty() {
        return Err(CliError::Usage("missing --an (or a_n_values in the config)".into()));
    }
    let seed = config.seed.unwrap_or(0);
    let mut rows = Vec::new();
    for rho in rhos(&args.grid, config)? {
        for u in thresholds(&args.grid, config)? {
            let u = sorted_or_fail(u, args.sort)?;
            let k = sharp_constants(u, rho)?;
            for n in sample_sizes(&args.sample, config)? {
                for &a in &ans {
                    let base = Row::new()
                        .with("rho", rho)
                        .with("u1", u.u1)
                        .with("u2", u.u2)
                        .with("n", fmt_n(&n))
                        .with("log_n", n.log_n())
                        .with("a_n", a)
                        .with("seed", seed)
                        .with("b", k.b)
                        .with("c", k.c)
                        .with("K", k.k)
                        .with("I", k.rate)
                        .with("k_row", k.row.as_str())
                        .with("case", k.case_label.as_str());
                    let row = match ScalingSequence::large(n, a).and_then(|s| sharp_ratio_detailed(&s, u, rho)) {
                        Ok(r) => base.with("ratio", r.ratio).with("ratio_over_K", r.ratio / k.k).with("status", "ok"),
                        Err(e) => {
                            base.with("ratio", "").with("ratio_over_K", "").with("status", format!("skipped: {e}"))
                        }
                    };
                    rows.push(row);
                }
            }
        }
    }
    Ok(rows_ok(rows))
}

/// `oracle`: exact tail, single-index tail and the decomposition.
pub fn cmd_oracle(args: &OracleArgs, config: &SweepConfig) -> Result<Outcome, CliError> {
    let seed = config.seed.unwrap_or(0);
    let mut rows = Vec::new();
    for rho in rhos(&args.grid, config)? {
        for u in thresholds(&args.grid, config)? {
            let u = sorted_or_fail(u, args.sort)?;
            for n in sample_sizes(&args.sample, config)? {
                let ans: Vec<f64> = if !args.an.is_empty() {
                    args.an.clone()
                } else if let Some(a) = config.a_n_values.clone().filter(|a| !a.is_empty()) {
                    a
                } else {
                    vec![n.log_n().sqrt()]
                };
                for a in ans {
                    let s = ScalingSequence::explicit(n, a)?;
                    let v = s.level(u);
                    let t = exact_max_tail_checked(n, v, rho)?;
                    let single = exists_single_index_tail(n, v, rho)?;
                    let d = union_sum(&s, u, rho)?;
                    let e = error_term_bound(&s, u, rho)?;
                    rows.push(
                        Row::new()
                            .with("rho", rho)
                            .with("u1", u.u1)
                            .with("u2", u.u2)
                            .with("n", fmt_n(&n))
                            .with("log_n", n.log_n())
                            .with("a_n", a)
                            .with("seed", seed)
                            .with("log_T", t.log_p.ln())
                            .with("log_single", single.ln())
                            .with("log_S_unequal", d.log_s_unequal)
                            .with("log_S_equal", d.log_s_equal)
                            .with("log_e_n", e.ln())
                            .with("dominant", d.dominant().as_str())
                            .with("branch", if t.branch == crate::oracle::Branch::Series { "series" } else { "closed" })
                            .with("precision_loss", t.precision_loss),
                    );
                }
            }
        }
    }
    Ok(rows_ok(rows))
}

/// `mc`: one estimate row per (ρ, u).
pub fn cmd_mc(args: &McArgs, config: &SweepConfig) -> Result<Outcome, CliError> {
    let n = match (args.n, config.n_values.as_ref().and_then(|v| v.first())) {
        (Some(n), _) => n,
        (None, Some(&l10)) => 10f64.powf(l10).round() as u64,
        _ => return Err(CliError::Usage("missing --n".into())),
    };
    let trials = args.trials.or(config.trials).unwrap_or(10_000);
    let seed = args.seed.or(config.seed).unwrap_or(1);
    let settings = McSettings::new(trials, seed);
    let mut rows = Vec::new();
    for rho in rhos(&args.grid, config)? {
        for u in thresholds(&args.grid, config)? {
            let base = Row::new()
                .with("n", n)
                .with("rho", rho)
                .with("u1", u.u1)
                .with("u2", u.u2)
                .with("a_n", args.an)
                .with("trials", trials)
                .with("seed", seed);
            if args.coincidence {
                rows.push(match index_coincidence(n, args.an, u, rho, settings) {
                    Ok(c) => base
                        .with("method", c.method.as_str())
                        .with("p_distinct", c.p_distinct)
                        .with("std_err", c.std_err)
                        .with("conditioning_hits", c.conditioning_hits)
                        .with("distinct_hits", c.distinct_hits)
                        .with("warning", ""),
                    Err(Error::InsufficientHits { hits }) => base
                        .with("method", "")
                        .with("p_distinct", "")
                        .with("std_err", "")
                        .with("conditioning_hits", hits)
                        .with("distinct_hits", "")
                        .with("warning", "InsufficientHits"),
                    Err(e) => return Err(e.into()),
                });
            } else {
                let v = u.scaled(args.an);
                let e = match args.method {
                    MethodArg::Naive => estimate_tail_naive(n, v, rho, settings)?,
                    MethodArg::Is => estimate_tail_is(n, v, rho, settings)?,
                };
                rows.push(
                    base.with("method", if e.method == Method::Naive { "naive" } else { "is" })
                        .with("log_p", e.log_p.ln())
                        .with("std_err_log", e.std_err_log)
                        .with("hits", e.hits)
                        .with("ess", e.ess)
                        .with("warning", e.warning.map_or(String::new(), |w| format!("{w:?}"))),
                );
            }
        }
    }
    Ok(rows_ok(rows))
}

/// `verify`: check rows (or summaries); exit code 1 if any criterion fails.
pub fn cmd_verify(args: &VerifyArgs, config: &SweepConfig) -> Result<Outcome, CliError> {
    let mut ids = Vec::new();
    for name in &args.criterion {
        ids.push(criterion_id(name).ok_or_else(|| CliError::Usage(format!("unknown criterion {name:?}")))?);
    }
    if ids.is_empty() {
        ids = CRITERIA.iter().map(|c| c.0).collect();
    }
    let mut opts = VerifyOptions::default();
    if let Some(seed) = args.seed.or(config.seed) {
        opts.seed = seed;
    }
    if let Some(l) = args.logn {
        opts.log_n.0 = l;
    }
    let mut rows = Vec::new();
    let mut all_pass = true;
    for id in ids {
        let report = run_criterion(id, &opts)?;
        all_pass &= report.pass();
        if args.summary {
            rows.push(
                Row::new()
                    .with("criterion", id)
                    .with("title", report.title)
                    .with("rows", report.rows.len() as u64)
                    .with("failed_rows", report.failures() as u64)
                    .with("elapsed_s", report.elapsed_s)
                    .with("budget_s", report.budget_s)
                    .with("seed", opts.seed)
                    .with("pass", report.pass()),
            );
        } else {
            for r in report.rows {
                rows.push(
                    Row::new()
                        .with("criterion", r.criterion)
                        .with("parameters", r.parameters)
                        .with("expected", r.expected)
                        .with("observed", r.observed)
                        .with("tolerance", r.tolerance)
                        .with("secondary", r.secondary)
                        .with("seed", opts.seed)
                        .with("pass", r.pass),
                );
            }
        }
    }
    Ok(Outcome { rows, code: if all_pass { exit::OK } else { exit::CRITERION_FAILED } })
}

/// Serializes rows as CSV (header from the first row) or a JSON array.
pub fn write_rows<W: Write>(rows: &[Row], format: OutputFormat, out: W) -> io::Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            if let Some(first) = rows.first() {
                w.write_record(first.0.iter().map(|(k, _)| *k))?;
            }
            for r in rows {
                w.write_record(r.0.iter().map(|(_, v)| v.csv()))?;
            }
            w.flush()
        }
        OutputFormat::Json => {
            let array: Vec<serde_json::Value> = rows
                .iter()
                .map(|r| serde_json::Value::Object(r.0.iter().map(|(k, v)| (k.to_string(), v.json())).collect()))
                .collect();
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, &array)?;
            writeln!(out)
        }
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match run_inner(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run_inner(cli: &Cli) -> Result<i32, CliError> {
    let config = match &cli.common.config {
        Some(p) => SweepConfig::load(p)?,
        None => SweepConfig::default(),
    };
    let outcome = match &cli.command {
        Command::Rate(a) => cmd_rate(a, &config)?,
        Command::Sharp(a) => cmd_sharp(a, &config)?,
        Command::Oracle(a) => cmd_oracle(a, &config)?,
        Command::Mc(a) => cmd_mc(a, &config)?,
        Command::Verify(a) => cmd_verify(a, &config)?,
    };
    let format = cli.common.format.or(config.output_format).unwrap_or(OutputFormat::Csv);
    match cli.common.out.as_ref().or(config.output_path.as_ref()) {
        Some(path) => write_rows(&outcome.rows, format, io::BufWriter::new(fs::File::create(path)?))?,
        None => write_rows(&outcome.rows, format, io::stdout().lock())?,
    }
    Ok(outcome.code)
}
