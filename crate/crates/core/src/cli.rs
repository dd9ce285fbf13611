//! Command-line front end. Exit codes: 0 success, 2 input or configuration
//! error, 3 numerical failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::asymptotics::{positive_increase_verified, ratio_table, AsymptoticForm};
use crate::bernstein::{positive_increase_report, validate_inequalities, BernsteinSpec, ComplexPoint};
use crate::bgamma::{arg_phistar_diagnostic, log_mellin, log_w};
use crate::config::ModelConfig;
use crate::error::{Error, Result};
use crate::inversion::density_deriv;
use crate::montecarlo::{compare_batch, sample_batch, SimConfig};
use crate::phi_star::phi_star;

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "expfunc", version, about = "Laws of exponential functionals of killed subordinators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
struct ModelSource {
    /// Model config file.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Model config as a JSON string.
    #[arg(long)]
    inline: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct Common {
    #[command(flatten)]
    source: ModelSource,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Suite {
    AppendixA,
    Bgamma,
    PositiveIncrease,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// φ, φ′, φ″, φ* and log M at a point, as JSON.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Point of the right half-plane, e.g. 4+0i.
        #[arg(long, allow_hyphen_values = true)]
        z: ComplexPoint,
    },
    /// Density derivatives f⁽ⁿ⁾(x) by Mellin inversion.
    Density {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        x: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        n: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Density against its large-x asymptotic.
    Asympt {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        x: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        n: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Use the compound Poisson form C e^{−φ(∞)x}.
        #[arg(long)]
        corollary: bool,
    },
    /// Validation suites; prints a JSON report.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Monte Carlo draws of the functional.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Jump threshold for infinite-activity models.
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        /// Paths stop once e^{−ξ} falls below this level.
        #[arg(long, default_value_t = 1e-10)]
        stop: f64,
        /// Worker threads, 0 for all cores.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Tail comparison points, e.g. x=1,2,4.
        #[arg(long)]
        compare: Option<String>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Eval { common, .. }
            | Command::Density { common, .. }
            | Command::Asympt { common, .. }
            | Command::Validate { common, .. }
            | Command::Simulate { common, .. } => common,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Eval { .. } => "eval",
            Command::Density { .. } => "density",
            Command::Asympt { .. } => "asympt",
            Command::Validate { .. } => "validate",
            Command::Simulate { .. } => "simulate",
        }
    }
}

/// Embedded in every output.
#[derive(Serialize, Debug, Clone)]
pub struct RunManifest {
    pub schema_version: u32,
    pub program_version: &'static str,
    pub subcommand: &'static str,
    /// Config path, or "inline".
    pub model_source: String,
    pub model: serde_json::Value,
    pub output: Option<String>,
    pub tolerance: Option<f64>,
    pub seed: Option<u64>,
    pub columns: Vec<&'static str>,
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_INPUT
    }
}

fn row_marker(e: &Error) -> &'static str {
    match e {
        Error::Domain(_) => "DOMAIN",
        Error::InvalidSpec(_) | Error::Config(_) => "INPUT",
        Error::TruncationUnbounded { .. } => "TRUNCATION",
        Error::PositiveIncreaseUnverified | Error::InconclusiveDiagnostic { .. } => "UNVERIFIED",
        _ => "NONCONVERGENT",
    }
}

/// Formats f64 so that CSV round-trips exactly.
fn num(v: f64) -> String {
    format!("{v:e}")
}

struct Output {
    text: String,
    code: i32,
    warnings: Vec<String>,
}

fn load_model(source: &ModelSource) -> Result<(ModelConfig, String)> {
    match (&source.model, &source.inline) {
        (Some(p), None) => Ok((ModelConfig::from_path(p)?, p.display().to_string())),
        (None, Some(j)) => Ok((ModelConfig::from_json(j)?, "inline".to_string())),
        _ => Err(Error::Config("exactly one of --model and --inline is required".into())),
    }
}

fn csv_text(manifest: &RunManifest, rows: Vec<Vec<String>>) -> Result<String> {
    let mut buf = Vec::new();
    writeln!(buf, "# manifest {}", serde_json::to_string(manifest).expect("manifest serializes"))
        .map_err(|e| Error::Config(e.to_string()))?;
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let io = |e: csv::Error| Error::Config(format!("writing CSV: {e}"));
        w.write_record(&manifest.columns).map_err(io)?;
        for r in rows {
            w.write_record(r).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Config(e.to_string()))?;
    }
    Ok(String::from_utf8(buf).expect("CSV is UTF-8"))
}

fn json_text(manifest: &RunManifest, body: serde_json::Value) -> String {
    let mut v = json!({ "manifest": manifest });
    if let (Some(obj), serde_json::Value::Object(b)) = (v.as_object_mut(), body) {
        obj.extend(b);
    }
    serde_json::to_string_pretty(&v).expect("output serializes") + "\n"
}

fn c(z: crate::C64) -> serde_json::Value {
    json!({ "re": z.re, "im": z.im })
}

fn cmd_eval(spec: &BernsteinSpec, manifest: &mut RunManifest, z: ComplexPoint) -> Result<Output> {
    let z = z.value();
    let d = spec.derivs(z, 2)?;
    let body = json!({
        "z": c(z),
        "phi": c(d[0]),
        "phi_prime": c(d[1]),
        "phi_second": c(d[2]),
        "phi_star": c(phi_star(spec, z)?),
        "log_w": c(log_w(spec, z)?),
        "log_mellin": c(log_mellin(spec, z)?),
    });
    Ok(Output { text: json_text(manifest, body), code: EXIT_OK, warnings: vec![] })
}

fn cmd_density(spec: &BernsteinSpec, manifest: &mut RunManifest, xs: &[f64], n: usize, tol: f64, format: Format) -> Result<Output> {
    manifest.columns = vec!["x", "n", "value", "abs_err", "status"];
    let results: Vec<Result<_>> = xs.par_iter().map(|&x| density_deriv(spec, x, n, tol)).collect();
    let code = if results.iter().any(|r| r.is_err()) { EXIT_NUMERICAL } else { EXIT_OK };
    let text = match format {
        Format::Csv => {
            let rows = xs
                .iter()
                .zip(&results)
                .map(|(&x, r)| match r {
                    Ok(v) => vec![num(x), n.to_string(), num(v.value), num(v.abs_err), "OK".into()],
                    Err(e) => vec![num(x), n.to_string(), String::new(), String::new(), row_marker(e).into()],
                })
                .collect();
            csv_text(manifest, rows)?
        }
        Format::Json => {
            let rows: Vec<_> = xs
                .iter()
                .zip(&results)
                .map(|(&x, r)| match r {
                    Ok(v) => json!({"x": x, "n": n, "value": v.value, "abs_err": v.abs_err, "status": "OK"}),
                    Err(e) => json!({"x": x, "n": n, "status": row_marker(e), "error": e.to_string()}),
                })
                .collect();
            json_text(manifest, json!({ "rows": rows }))
        }
    };
    let warnings = results.iter().filter_map(|r| r.as_ref().err().map(|e| e.to_string())).collect();
    Ok(Output { text, code, warnings })
}

fn cmd_asympt(
    spec: &BernsteinSpec,
    manifest: &mut RunManifest,
    xs: &[f64],
    n: usize,
    tol: f64,
    corollary: bool,
    format: Format,
) -> Result<Output> {
    manifest.columns = vec!["x", "n", "density", "asymptotic", "ratio", "warning", "status"];
    let form = if corollary { AsymptoticForm::CompoundPoisson } else { AsymptoticForm::General };
    let warning = if corollary {
        match crate::asymptotics::cpp_asymptotic(spec, xs.first().copied().unwrap_or(1.0).max(1e-3), n) {
            Ok(a) if a.caveat => "non_integrable_small_jumps",
            _ => "",
        }
    } else if !positive_increase_verified(spec) {
        "positive_increase_unverified"
    } else {
        ""
    };
    let results: Vec<Result<_>> = xs.par_iter().map(|&x| ratio_table(spec, &[x], n, tol, form).map(|v| v[0])).collect();
    let code = if results.iter().any(|r| r.is_err()) { EXIT_NUMERICAL } else { EXIT_OK };
    let text = match format {
        Format::Csv => {
            let rows = xs
                .iter()
                .zip(&results)
                .map(|(&x, r)| match r {
                    Ok(v) => vec![num(x), n.to_string(), num(v.density), num(v.asymptotic), num(v.ratio), warning.into(), "OK".into()],
                    Err(e) => vec![num(x), n.to_string(), String::new(), String::new(), String::new(), warning.into(), row_marker(e).into()],
                })
                .collect();
            csv_text(manifest, rows)?
        }
        Format::Json => {
            let rows: Vec<_> = xs
                .iter()
                .zip(&results)
                .map(|(&x, r)| match r {
                    Ok(v) => json!({"x": x, "n": n, "density": v.density, "asymptotic": v.asymptotic, "ratio": v.ratio, "warning": warning, "status": "OK"}),
                    Err(e) => json!({"x": x, "n": n, "warning": warning, "status": row_marker(e), "error": e.to_string()}),
                })
                .collect();
            json_text(manifest, json!({ "rows": rows }))
        }
    };
    let mut warnings: Vec<String> = results.iter().filter_map(|r| r.as_ref().err().map(|e| e.to_string())).collect();
    if !warning.is_empty() {
        warnings.push(warning.replace('_', " "));
    }
    Ok(Output { text, code, warnings })
}

/// |log W(n+1) − Σ ln φ(k)| for n = 1..=15, relative on the product.
fn bgamma_suite(spec: &BernsteinSpec) -> Result<(bool, serde_json::Value)> {
    let mut rows = Vec::new();
    let mut sum = 0.0;
    let mut pass = true;
    for n in 1..=15usize {
        sum += spec.phi_real(n as f64)?.ln();
        let lw = log_w(spec, crate::C64::new(n as f64 + 1.0, 0.0))?;
        // |e^{lw − sum} − 1|
        let rel = (crate::C64::new(lw.re - sum, lw.im)).exp() - 1.0;
        let ok = rel.norm() <= 1e-8;
        pass &= ok;
        rows.push(json!({"n": n, "log_w": lw.re, "log_product": sum, "relative_error": rel.norm(), "pass": ok}));
    }
    Ok((pass, json!({ "rows": rows })))
}

fn cmd_validate(spec: &BernsteinSpec, manifest: &mut RunManifest, suite: Suite, seed: u64, samples: usize) -> Result<Output> {
    let mut warnings = Vec::new();
    let (pass, body) = match suite {
        Suite::AppendixA => {
            let report = validate_inequalities(spec, samples, seed)?;
            let a_grid: Vec<f64> = (0..=12).map(|i| 10f64.powf(-2.0 + i as f64 / 3.0)).collect();
            let t_grid: Vec<f64> = (0..=16).map(|i| 10f64.powf(-3.0 + i as f64 / 2.0)).collect();
            let args = arg_phistar_diagnostic(spec, &a_grid, &t_grid)?;
            let pass = report.total_violations() == 0 && args.nonnegative;
            (pass, json!({"inequalities": report, "arg_phi_star": {"nonnegative": args.nonnegative, "min_arg": args.min_arg, "min_t_arg": args.min_t_arg, "points": args.rows.len()}}))
        }
        Suite::Bgamma => bgamma_suite(spec)?,
        Suite::PositiveIncrease => {
            let grid: Vec<f64> = (0..=60).map(|i| 10f64.powf(i as f64 / 10.0)).collect();
            match positive_increase_report(spec, &grid) {
                Ok(r) => (r.verdict, json!({ "verdict": if r.verdict { "positive" } else { "negative" }, "report": r })),
                Err(Error::InconclusiveDiagnostic { margin, report }) => {
                    warnings.push(format!("positive increase inconclusive: criterion within {margin} of 1"));
                    (true, json!({ "verdict": "inconclusive", "margin": margin, "report": report }))
                }
                Err(e) => return Err(e),
            }
        }
    };
    let mut body = body;
    body["suite"] = serde_json::to_value(suite).expect("suite serializes");
    body["pass"] = json!(pass);
    let code = if pass { EXIT_OK } else { EXIT_NUMERICAL };
    Ok(Output { text: json_text(manifest, body), code, warnings })
}

fn parse_compare(s: &str) -> Result<Vec<f64>> {
    let body = s.trim().strip_prefix("x=").unwrap_or(s.trim());
    body.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad --compare value '{t}'"))))
        .collect()
}

fn cmd_simulate(
    spec: &BernsteinSpec,
    manifest: &mut RunManifest,
    config: SimConfig,
    compare: Option<&str>,
    tol: f64,
    format: Format,
) -> Result<Output> {
    let xs = compare.map(parse_compare).transpose()?;
    let batch = sample_batch(spec, &config)?;
    let text = match (xs, format) {
        (Some(xs), f) => {
            manifest.columns = vec!["x", "empirical_tail", "inverted_tail", "std_error", "z_score", "flagged"];
            let rows = compare_batch(spec, &batch, &xs, tol)?;
            if f == Format::Csv {
                let rows = rows
                    .iter()
                    .map(|r| vec![num(r.x), num(r.empirical_tail), num(r.inverted_tail), num(r.std_error), num(r.z_score), r.flagged.to_string()])
                    .collect();
                csv_text(manifest, rows)?
            } else {
                json_text(manifest, json!({ "summary": batch.summary_json(), "comparison": rows }))
            }
        }
        (None, Format::Json) => json_text(manifest, batch.summary_json()),
        (None, Format::Csv) => {
            manifest.columns = vec!["draw"];
            csv_text(manifest, batch.draws.iter().map(|&d| vec![num(d)]).collect())?
        }
    };
    let mut warnings = Vec::new();
    if batch.scheme_bias {
        warnings.push(format!("small jumps below {} replaced by their mean drift", config.jump_threshold));
    }
    Ok(Output { text, code: EXIT_OK, warnings })
}

fn dispatch(cmd: &Command) -> Result<Output> {
    let common = cmd.common();
    let (config, source) = load_model(&common.source)?;
    let spec = config.build()?;
    let mut manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        program_version: env!("CARGO_PKG_VERSION"),
        subcommand: cmd.name(),
        model_source: source,
        model: serde_json::to_value(&config).expect("config serializes"),
        output: common.out.as_ref().map(|p| p.display().to_string()),
        tolerance: None,
        seed: None,
        columns: vec![],
    };
    match cmd {
        Command::Eval { z, .. } => cmd_eval(&spec, &mut manifest, *z),
        Command::Density { x, n, tol, .. } => {
            manifest.tolerance = Some(*tol);
            cmd_density(&spec, &mut manifest, x, *n, *tol, common.format)
        }
        Command::Asympt { x, n, tol, corollary, .. } => {
            manifest.tolerance = Some(*tol);
            cmd_asympt(&spec, &mut manifest, x, *n, *tol, *corollary, common.format)
        }
        Command::Validate { suite, seed, samples, .. } => {
            manifest.seed = Some(*seed);
            cmd_validate(&spec, &mut manifest, *suite, *seed, *samples)
        }
        Command::Simulate { samples, seed, eps, stop, workers, compare, tol, .. } => {
            manifest.seed = Some(*seed);
            manifest.tolerance = compare.as_ref().map(|_| *tol);
            let config = SimConfig { sample_count: *samples, seed: *seed, jump_threshold: *eps, stop_level: *stop, worker_count: *workers };
            cmd_simulate(&spec, &mut manifest, config, compare.as_deref(), *tol, common.format)
        }
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { write!(stdout, "{text}") } else { write!(stderr, "{text}") };
            return code;
        }
    };
    match dispatch(&cli.command) {
        Ok(out) => {
            for w in &out.warnings {
                let _ = writeln!(stderr, "warning: {w}");
            }
            let written = match &cli.command.common().out {
                Some(p) => std::fs::write(p, &out.text).map_err(|e| format!("writing {}: {e}", p.display())),
                None => stdout.write_all(out.text.as_bytes()).map_err(|e| e.to_string()),
            };
            match written {
                Ok(()) => out.code,
                Err(e) => {
                    let _ = writeln!(stderr, "error: {e}");
                    EXIT_INPUT
                }
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}
