//! Command-line front end shared by the `nahm` binary and the tests.
//!
//! Every subcommand returns its standard output as a string so that runs can be compared
//! byte for byte. Exit codes: 0 success, 1 failed verification or computation, 2 usage error.

pub mod selftest;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rug::{Float, Rational};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::asymptotics::{predict_radial, AsymptoticsError};
use crate::model::{fmt_rational, parse_nahm_json, parse_rational, LatticeFilter, ModelError, NahmData};
use crate::qseries::corpus::bundled;
use crate::qseries::{eval_numeric, load_identity, nahm_series, verify_identity_file, QPoint, SeriesError};
use crate::scanner::{scan, write_csv, ScanConfig};
use crate::solver::{compute_lambda, detect_rational, solve_nahm, SolverError};
use crate::specialfn::num::{fmt_complex, fmt_float, ten_pow};
use crate::specialfn::Prec;
use crate::transforms::{default_taus, preset, verify_s, verify_t, TransformError, PRESETS};

pub const SCHEMA_HELP: &str = r#"Nahm data is a JSON object
  {"A": [[num-or-"p/q", ...], ...], "b": [...], "c": "p/q", "d": [ints],
   "constraints": [{"i": int, "r": int, "s": int}, ...]}
with A·diag(d) symmetric positive definite; "c" and "constraints" are optional.
Bundled specs: rr.json, kr.json, b2inv.json, capparelli.json."#;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    /// A Nahm-data file that is missing or malformed.
    #[error("{0}")]
    Spec(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Asymptotics(#[from] AsymptoticsError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error("{0}")]
    Io(String),
}

#[derive(Debug, Parser)]
#[command(name = "nahm", version, about = "Nahm sums: q-series, Nahm's equation, asymptotics, modularity scans")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Working precision in decimal digits.
    #[arg(long, global = true, default_value_t = 60, value_parser = clap::value_parser!(u32).range(20..))]
    pub prec: u32,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output format; CSV for `scan`, JSON elsewhere by default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Numerical value of a Nahm sum at one point.
    Eval {
        #[arg(long)]
        spec: String,
        /// Real `q` in (0, 1).
        #[arg(long, conflicts_with = "tau")]
        q: Option<String>,
        /// `τ` as `re,im` with `q = e^{2πiτ}`.
        #[arg(long, allow_hyphen_values = true)]
        tau: Option<String>,
    },
    /// Exact coefficients up to `q^order`.
    Coeffs {
        #[arg(long)]
        spec: String,
        #[arg(long, default_value = "50")]
        order: String,
    },
    /// Verify an identity file (or a bundled one by name).
    Identity {
        #[arg(long)]
        file: String,
        #[arg(long)]
        order: Option<String>,
    },
    /// Solve Nahm's equation and report `Λ`, `λ`.
    Solve {
        #[arg(long)]
        spec: String,
    },
    /// Compare the asymptotic expansion with radial values.
    Asympt {
        #[arg(long)]
        spec: String,
        #[arg(long, default_value = "0")]
        alpha: String,
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
        order: u64,
        #[arg(long, default_value = "1/40,1/60,1/80")]
        eps: String,
    },
    /// Third-difference search over matrices and `b` vectors.
    Scan {
        #[arg(long, default_value_t = 2)]
        rank: usize,
        /// Symmetrizer, comma separated.
        #[arg(long)]
        d: String,
        #[arg(long)]
        height: u32,
        #[arg(long = "b-height", default_value_t = 2)]
        b_height: u32,
        #[arg(long, default_value_t = crate::scanner::DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long = "n-base", default_value_t = crate::scanner::DEFAULT_N_BASE)]
        n_base: u32,
        /// Also try parity-split sums for `b` vectors that fail.
        #[arg(long)]
        split: bool,
        /// CSV destination; standard output if absent.
        #[arg(long)]
        out: Option<String>,
    },
    /// Check a bundled transformation system at imaginary `τ`.
    VerifyTransform {
        #[arg(long)]
        preset: String,
        /// Imaginary parts of `τ`.
        #[arg(long, default_value = "0.8,1.0,1.3")]
        tau: String,
        /// Largest accepted relative error; the preset's own bound if absent.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Worked examples and invariant checks of every module.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Only the small worked examples.
        #[arg(long)]
        quick: bool,
    },
}

/// Standard output of a subcommand and its exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub code: i32,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Self { stdout, code: 0 }
    }
}

/// Parses `argv` (including the program name), runs it, prints, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Some(n) = cli.global.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match execute(&cli.command, &cli.global) {
        Ok(out) => {
            let mut w = std::io::stdout().lock();
            let _ = w.write_all(out.stdout.as_bytes()).and_then(|_| w.flush());
            out.code
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(CliError::Spec(msg)) => {
            eprintln!("error: {msg}\n\n{SCHEMA_HELP}");
            2
        }
        Err(CliError::Model(e)) => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Runs `argv` without printing; parse errors become [`CliError::Usage`].
pub fn run_captured<I, T>(args: I) -> Result<Outcome, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Usage(e.to_string()))?;
    execute(&cli.command, &cli.global)
}

fn bundled_spec(name: &str) -> Option<&'static str> {
    match name.trim_end_matches(".json") {
        "rr" => Some(include_str!("../../data/presets/rr.json")),
        "kr" => Some(include_str!("../../data/presets/kr.json")),
        "b2inv" => Some(include_str!("../../data/presets/b2inv.json")),
        "capparelli" => Some(include_str!("../../data/presets/capparelli.json")),
        _ => None,
    }
}

/// Reads a file, falling back to a bundled name when no such file exists.
fn read_input(path: &str, fallback: impl Fn(&str) -> Option<&'static str>) -> Result<String, CliError> {
    if Path::new(path).exists() {
        return std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{path}: {e}")));
    }
    let base = Path::new(path).file_name().and_then(|s| s.to_str()).unwrap_or(path);
    fallback(base).map(str::to_string).ok_or_else(|| CliError::Usage(format!("no such file `{path}`")))
}

pub fn load_spec(path: &str) -> Result<(NahmData, LatticeFilter), CliError> {
    let text = read_input(path, bundled_spec).map_err(|e| CliError::Spec(e.to_string()))?;
    parse_nahm_json(&text).map_err(|e| CliError::Spec(format!("{path}: {e}")))
}

fn rational_arg(s: &str, what: &str) -> Result<Rational, CliError> {
    parse_rational(s).map_err(|_| CliError::Usage(format!("{what}: expected a rational, got `{s}`")))
}

fn list_arg<T>(s: &str, what: &str, f: impl Fn(&str) -> Option<T>) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(|x| f(x.trim()).ok_or_else(|| CliError::Usage(format!("{what}: cannot parse `{x}`"))))
        .collect()
}

fn float_arg(s: &str, bits: u32) -> Option<Float> {
    Float::parse(s).ok().map(|p| Float::with_val(bits, p))
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

pub fn execute(cmd: &Command, g: &Global) -> Result<Outcome, CliError> {
    let prec = Prec { digits: g.prec };
    match cmd {
        Command::Eval { spec, q, tau } => eval_cmd(spec, q.as_deref(), tau.as_deref(), prec),
        Command::Coeffs { spec, order } => coeffs_cmd(spec, order, g.format.unwrap_or(Format::Json)),
        Command::Identity { file, order } => identity_cmd(file, order.as_deref()),
        Command::Solve { spec } => solve_cmd(spec, prec),
        Command::Asympt { spec, alpha, order, eps } => {
            let (data, filter) = load_spec(spec)?;
            if !filter.constraints.is_empty() || !filter.lower.is_empty() {
                return Err(CliError::Usage("asympt takes unrestricted sums".into()));
            }
            let alpha = rational_arg(alpha, "--alpha")?;
            let eps = list_arg(eps, "--eps", |x| parse_rational(x).ok().filter(|r| *r > 0))?;
            let rep = predict_radial(&data, &alpha, &eps, *order as usize, prec)?;
            Ok(Outcome::ok(to_json(&rep)))
        }
        Command::Scan { rank, d, height, b_height, threshold, n_base, split, out } => {
            let d = list_arg(d, "--d", |x| x.parse::<u32>().ok().filter(|v| *v > 0))?;
            if d.len() != *rank {
                return Err(CliError::Usage(format!("--d has {} entries for rank {rank}", d.len())));
            }
            let mut cfg = ScanConfig::new(&d, *height, *b_height);
            cfg.threshold = *threshold;
            cfg.prec = prec;
            cfg.n_base = *n_base;
            cfg.split = *split;
            scan_cmd(&cfg, out.as_deref(), g.format.unwrap_or(Format::Csv))
        }
        Command::VerifyTransform { preset: name, tau, tol } => transform_cmd(name, tau, *tol, prec),
        Command::Selftest { seed, quick } => {
            let rep = selftest::run(&selftest::Config { seed: *seed, quick: *quick });
            let mut s = String::new();
            for c in &rep.checks {
                let _ = writeln!(s, "{} {}/{}: {}", if c.passed { "ok  " } else { "FAIL" }, c.group, c.name, c.detail);
            }
            let _ = writeln!(s, "selftest seed {}: {} passed, {} failed", rep.seed, rep.passed, rep.failed);
            Ok(Outcome { stdout: s, code: if rep.failed == 0 { 0 } else { 1 } })
        }
    }
}

fn eval_cmd(spec: &str, q: Option<&str>, tau: Option<&str>, prec: Prec) -> Result<Outcome, CliError> {
    let (data, filter) = load_spec(spec)?;
    let bits = prec.bits();
    let point = match (q, tau) {
        (Some(x), None) => {
            let v = float_arg(x, bits).filter(|v| *v > 0u32 && *v < 1u32);
            QPoint::real(&v.ok_or_else(|| CliError::Usage("--q must lie in (0, 1)".into()))?)
        }
        (None, Some(t)) => {
            let parts = list_arg(t, "--tau", |x| float_arg(x, bits))?;
            if parts.len() != 2 || parts[1] <= 0u32 {
                return Err(CliError::Usage("--tau is `re,im` with im > 0".into()));
            }
            QPoint::from_tau(&rug::Complex::with_val(bits, (&parts[0], &parts[1])))
        }
        _ => return Err(CliError::Usage("give exactly one of --q, --tau".into())),
    };
    let r = eval_numeric(&data, &filter, &point, prec)?;
    let out = json!({
        "schema": 1,
        "value": fmt_complex(&r.value, prec.digits as usize),
        "truncation_bound": fmt_float(&r.truncation_bound, 6),
        "terms": r.terms,
    });
    Ok(Outcome::ok(to_json(&out)))
}

fn coeffs_cmd(spec: &str, order: &str, format: Format) -> Result<Outcome, CliError> {
    let (data, filter) = load_spec(spec)?;
    let order = rational_arg(order, "--order")?;
    let s = nahm_series(&data, &filter, &order);
    let terms: Vec<(String, String)> =
        s.terms().filter(|(_, c)| **c != 0).map(|(e, c)| (fmt_rational(&e), fmt_rational(c))).collect();
    let stdout = match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["exponent", "coeff"]).map_err(|e| CliError::Io(e.to_string()))?;
            for (e, c) in &terms {
                w.write_record([e, c]).map_err(|e| CliError::Io(e.to_string()))?;
            }
            String::from_utf8(w.into_inner().map_err(|e| CliError::Io(e.to_string()))?).expect("utf-8")
        }
        Format::Json => to_json(&json!({
            "schema": 1,
            "order": fmt_rational(s.order()),
            "den": s.den(),
            "terms": terms.iter().map(|(e, c)| json!([e, c])).collect::<Vec<_>>(),
        })),
    };
    Ok(Outcome::ok(stdout))
}

fn identity_cmd(file: &str, order: Option<&str>) -> Result<Outcome, CliError> {
    let text = read_input(file, |name| {
        let want = if name.ends_with(".json") { name.to_string() } else { format!("{name}.json") };
        bundled().into_iter().find(|(n, _)| *n == want).map(|(_, t)| t)
    })?;
    let id = load_identity(&text)?;
    let order = order.map(|o| rational_arg(o, "--order")).transpose()?;
    let reports = verify_identity_file(&id, order.as_ref())?;
    let mut s = String::new();
    let mut code = 0;
    for (label, rep) in &reports {
        let _ = writeln!(s, "{}: {label}: {rep}", id.name);
        if !rep.is_equal() {
            code = 1;
        }
    }
    Ok(Outcome { stdout: s, code })
}

fn solve_cmd(spec: &str, prec: Prec) -> Result<Outcome, CliError> {
    let (data, _) = load_spec(spec)?;
    let sol = solve_nahm(&data, prec)?;
    let (big, lam) = compute_lambda(&sol, &data)?;
    let bits = lam.prec();
    let tol = ten_pow(-(prec.digits as i32) / 2, bits);
    let rational = detect_rational(&lam, 1_000_000, &tol);
    let d = prec.digits as usize;
    let out = json!({
        "schema": 1,
        "z": sol.z.iter().map(|z| fmt_float(z, d)).collect::<Vec<_>>(),
        "Lambda": fmt_float(&big, d),
        "lambda": fmt_float(&lam, d),
        "lambda_rational": rational.as_ref().map(fmt_rational),
        "residual": fmt_float(&sol.residual, 3),
        "iterations": sol.iterations,
    });
    Ok(Outcome::ok(to_json(&out)))
}

fn scan_cmd(cfg: &ScanConfig, out: Option<&str>, format: Format) -> Result<Outcome, CliError> {
    let res = scan(cfg)?;
    let body = match format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_csv(&res, &mut buf).map_err(|e| CliError::Io(e.to_string()))?;
            String::from_utf8(buf).expect("utf-8")
        }
        Format::Json => to_json(&json!({
            "schema": 1,
            "stats": res.stats,
            "records": res.candidates().map(|r| r.row()).collect::<Vec<_>>(),
            "failures": res.failures,
        })),
    };
    match out {
        Some(path) => {
            std::fs::write(path, body).map_err(|e| CliError::Io(format!("{path}: {e}")))?;
            Ok(Outcome::ok(to_json(&json!({"schema": 1, "out": path, "stats": res.stats}))))
        }
        None => Ok(Outcome::ok(body)),
    }
}

/// Bounds the bundled systems are expected to meet at `P = 60`.
pub fn preset_tolerance(name: &str) -> f64 {
    match name {
        "rr" => 1e-25,
        "kr" => 1e-20,
        "b2inv" => 1e-15,
        _ => 1e-12,
    }
}

fn transform_cmd(name: &str, tau: &str, tol: Option<f64>, prec: Prec) -> Result<Outcome, CliError> {
    if !PRESETS.contains(&name) {
        return Err(CliError::Usage(format!("unknown preset `{name}`; one of {}", PRESETS.join(", "))));
    }
    let sys = preset(name)?;
    let bits = prec.bits();
    let taus = if tau.is_empty() {
        default_taus(bits)
    } else {
        list_arg(tau, "--tau", |x| float_arg(x, bits).filter(|v| *v > 0u32))?
    };
    let multipliers = verify_t(&sys, 6)?;
    let rep = verify_s(&sys, &taus, prec)?;
    let tol = tol.unwrap_or_else(|| preset_tolerance(name));
    let passed = rep.max_error < tol;
    let out = json!({
        "schema": 1,
        "report": rep,
        "t_multipliers": multipliers.iter().map(|(l, r)| json!([l, fmt_rational(r)])).collect::<Vec<_>>(),
        "tolerance": tol,
        "passed": passed,
    });
    Ok(Outcome { stdout: to_json(&out), code: if passed { 0 } else { 1 } })
}
