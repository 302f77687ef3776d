//! Command-line front end: simulate paths, build intervals, and regenerate
//! the tables.
//!
//! Exit status is 0 on success, 2 when the only outcome is an infeasible
//! interval, and 1 on errors. `--config <file.json>` overrides any flag of
//! the chosen subcommand, keyed by the long flag name with underscores.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use hurst_ci::experiments::{
    run_coverage, write_table, CoverageSpec, ExperimentConfig, Procedure, TableId, THREADS_ENV,
};
use hurst_ci::fbm_sim::{FgnGenerator, SamplePath, SimConfig};
use hurst_ci::filter_bank::{dilate, kappa, parse_filter_spec, sup_l1_norm, tau_a};
use hurst_ci::intervals::{
    ci_bnp, ci_clt_known, ci_clt_unknown, ci_known_scale, ci_unknown_scale, min_n_invertible,
    DilationDesign, Method,
};
use hurst_ci::{Error, Result};

#[derive(Parser)]
#[command(
    name = "hurst-ci",
    version,
    about = "Confidence intervals for the Hurst parameter of fractional Brownian motion"
)]
struct Cli {
    /// JSON file whose keys override the subcommand's flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one fBm path on the grid i/n.
    Simulate(SimulateArgs),
    /// Confidence interval for H from a path stored as CSV.
    Estimate(EstimateArgs),
    /// kappa, tau and the minimal sample size of a filter.
    Kappa(KappaArgs),
    /// Regenerate a table (1-6) or the length-ratio data (fig1).
    Table(TableArgs),
    /// Monte-Carlo coverage of one method in one setting.
    Coverage(CoverageArgs),
}

#[derive(Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateArgs {
    #[arg(long)]
    hurst: f64,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Replication index, selecting an independent stream of the seed.
    #[arg(long, default_value_t = 0)]
    replication: u64,
    /// Output file; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EstimateArgs {
    /// CSV with one observation per line; `#` lines are skipped.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_parser = parse_method)]
    method: Method,
    #[arg(long, default_value = "i2")]
    filter: String,
    /// Dilation applied to the filter before use.
    #[arg(long, default_value_t = 1)]
    dilation: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Number of dilations for the scale-free methods.
    #[arg(long = "big-m", default_value_t = 2)]
    big_m: usize,
    /// Known scale C; the path is divided by it for the known-scale methods.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Contrast vector d, comma separated; defaults to centred log dilations.
    #[arg(long, value_delimiter = ',')]
    d: Option<Vec<f64>>,
    /// Upper bound H* for the second-difference baseline.
    #[arg(long, default_value_t = 0.8)]
    h_star: f64,
}

#[derive(Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KappaArgs {
    /// Filter name, optionally dilated as in `d4^3`.
    #[arg(long)]
    filter: String,
}

#[derive(Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableArgs {
    /// 1-6 or fig1.
    #[arg(long)]
    id: String,
    #[arg(long, default_value_t = 500)]
    replications: usize,
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    hurst: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, value_delimiter = ',')]
    filters: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    m: Vec<usize>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 0.8)]
    h_star: f64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = THREADS_ENV)]
    threads: Option<usize>,
    #[arg(long, default_value = "out")]
    output_dir: PathBuf,
}

#[derive(Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoverageArgs {
    #[arg(long, value_parser = parse_method)]
    method: Method,
    #[arg(long, default_value = "i2")]
    filter: String,
    #[arg(long = "big-m")]
    big_m: Option<usize>,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    hurst: f64,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 500)]
    replications: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, env = THREADS_ENV)]
    threads: Option<usize>,
    #[arg(long, default_value_t = 0.8)]
    h_star: f64,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    Method::parse(s).map_err(|e| e.to_string())
}

/// Applies the keys of a JSON config file on top of parsed flags.
fn overlay<T: Serialize + DeserializeOwned>(args: T, file: Option<&Path>) -> Result<T> {
    let Some(path) = file else { return Ok(args) };
    let text = std::fs::read_to_string(path)?;
    let file_value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let serde_json::Value::Object(over) = file_value else {
        return Err(Error::Config(format!(
            "{}: expected a JSON object",
            path.display()
        )));
    };
    let mut base = serde_json::to_value(args).map_err(|e| Error::Config(e.to_string()))?;
    let obj = base
        .as_object_mut()
        .expect("flag structs serialise to objects");
    for (k, v) in over {
        obj.insert(k, v);
    }
    serde_json::from_value(base).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

enum Outcome {
    Done,
    Infeasible,
}

fn read_path(path: &Path) -> Result<SamplePath> {
    let text = std::fs::read_to_string(path)?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let field = line.split(',').next().unwrap_or("").trim();
        let v: f64 = field.parse().map_err(|_| {
            Error::Config(format!(
                "{}:{}: not a number: {field}",
                path.display(),
                i + 1
            ))
        })?;
        values.push(v);
    }
    Ok(SamplePath::from_values(values))
}

fn simulate(a: SimulateArgs) -> Result<Outcome> {
    let gen = FgnGenerator::new(SimConfig::new(a.hurst, a.scale, a.n, a.seed))?;
    let path = gen.replication(a.replication);
    let mut text = format!("# H={},C={},n={},seed={}\n", a.hurst, a.scale, a.n, a.seed);
    for v in &path.values {
        text.push_str(&format!("{v}\n"));
    }
    match a.output {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(Outcome::Done)
}

fn estimate(a: EstimateArgs) -> Result<Outcome> {
    if a.dilation == 0 {
        return Err(Error::Config("dilation must be at least 1".into()));
    }
    let filter = dilate(&parse_filter_spec(&a.filter)?, a.dilation);
    let path = read_path(&a.input)?;
    let unit = path.scaled(1.0 / a.scale);
    let ci = match a.method {
        Method::CiKnown => ci_known_scale(&unit, &filter, a.alpha)?,
        Method::CltKnown => ci_clt_known(&unit, &filter, a.alpha)?,
        Method::Bnp => ci_bnp(&unit, a.alpha, a.h_star)?,
        Method::CiUnknown => {
            let design = match a.d {
                Some(d) => DilationDesign::new(d)?,
                None => DilationDesign::centred_log(a.big_m)?,
            };
            ci_unknown_scale(&path, &filter, &design, a.alpha)?
        }
        Method::CltUnknown => {
            if a.d.is_some() {
                return Err(Error::Config(
                    "clt-unknown uses the centred log design only".into(),
                ));
            }
            ci_clt_unknown(&path, &filter, a.big_m, a.alpha)?
        }
    };
    let record = json!({
        "method": ci.method,
        "alpha": a.alpha,
        "lower": ci.lower,
        "upper": ci.upper,
        "feasible": ci.feasible,
        "estimator": ci.estimator,
        "diagnostics": ci.diagnostics,
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&record).expect("serialisable")
    );
    Ok(if ci.feasible {
        Outcome::Done
    } else {
        Outcome::Infeasible
    })
}

fn kappa_cmd(a: KappaArgs) -> Result<Outcome> {
    let filter = parse_filter_spec(&a.filter)?;
    let sup = sup_l1_norm(&filter)?;
    let record = json!({
        "filter": filter.name(),
        "order": filter.order(),
        "length": filter.ell(),
        "kappa": kappa(&filter)?,
        "sup_l1": sup.value,
        "argmax_h": sup.h,
        "tau": tau_a(&filter),
        // only defined for order >= 2
        "min_n": min_n_invertible(&filter).ok(),
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&record).expect("serialisable")
    );
    Ok(Outcome::Done)
}

fn table(a: TableArgs) -> Result<Outcome> {
    let id = TableId::parse(&a.id)?;
    let cfg = ExperimentConfig {
        table: Some(a.id),
        replications: a.replications,
        n: a.n,
        hurst: a.hurst,
        scale: a.scale,
        filters: a.filters,
        m: a.m,
        alpha: a.alpha,
        h_star: a.h_star,
        seed: a.seed,
        threads: a.threads,
        output_dir: a.output_dir.clone(),
    };
    let (csv, json_path) = write_table(id, &cfg, &a.output_dir)?;
    println!("{}\n{}", csv.display(), json_path.display());
    Ok(Outcome::Done)
}

fn coverage(a: CoverageArgs) -> Result<Outcome> {
    let threads = ExperimentConfig {
        threads: a.threads,
        ..Default::default()
    }
    .thread_count();
    let spec = CoverageSpec {
        procedure: Procedure::new(a.method, &a.filter, a.big_m)?,
        n: a.n,
        hurst: a.hurst,
        scale: a.scale,
        alpha: a.alpha,
        replications: a.replications,
        seed: a.seed,
        threads,
        h_star: a.h_star,
    };
    if !(a.hurst > 0.0 && a.hurst < 1.0) {
        return Err(Error::HurstOutOfRange(a.hurst));
    }
    let rec = run_coverage(&spec)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&rec).expect("serialisable")
    );
    Ok(if rec.feasible_rate == 0.0 {
        Outcome::Infeasible
    } else {
        Outcome::Done
    })
}

fn run(cli: Cli) -> Result<Outcome> {
    let cfg = cli.config.as_deref();
    match cli.command {
        Command::Simulate(a) => simulate(overlay(a, cfg)?),
        Command::Estimate(a) => estimate(overlay(a, cfg)?),
        Command::Kappa(a) => kappa_cmd(overlay(a, cfg)?),
        Command::Table(a) => table(overlay(a, cfg)?),
        Command::Coverage(a) => coverage(overlay(a, cfg)?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Infeasible) => ExitCode::from(2),
        Err(e) => {
            eprintln!("hurst-ci: {e}");
            ExitCode::from(1)
        }
    }
}
