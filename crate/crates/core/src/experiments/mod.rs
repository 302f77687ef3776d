//! Monte-Carlo coverage harness and generators for the published tables.

mod tables;

pub use tables::{run_table, write_table, TableId, TableOutput};

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fbm_sim::{FgnGenerator, SamplePath, SimConfig};
use crate::filter_bank::{parse_filter_spec, Filter};
use crate::intervals::{
    ci_bnp, ci_clt_known, ci_clt_unknown, ci_known_scale, ci_unknown_scale, ConfidenceInterval,
    DilationDesign, Method,
};

/// Version of the CSV/JSON layouts written by the harness.
pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable holding the default worker count.
pub const THREADS_ENV: &str = "HURST_CI_THREADS";

fn default_reps() -> usize {
    500
}
fn default_scale() -> f64 {
    1.0
}
fn default_alpha() -> f64 {
    0.05
}
fn default_h_star() -> f64 {
    0.8
}
fn default_out() -> std::path::PathBuf {
    "out".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub table: Option<String>,
    #[serde(default = "default_reps")]
    pub replications: usize,
    /// Empty lists fall back to the table's own grid.
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default)]
    pub hurst: Vec<f64>,
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default)]
    pub filters: Vec<String>,
    #[serde(default)]
    pub m: Vec<usize>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Upper bound H* for the second-difference baseline.
    #[serde(default = "default_h_star")]
    pub h_star: f64,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default = "default_out")]
    pub output_dir: std::path::PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            table: None,
            replications: default_reps(),
            n: Vec::new(),
            hurst: Vec::new(),
            scale: default_scale(),
            filters: Vec::new(),
            m: Vec::new(),
            alpha: default_alpha(),
            h_star: default_h_star(),
            seed: None,
            threads: None,
            output_dir: default_out(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if let Some(&h) = self.hurst.iter().find(|&&h| !(h > 0.0 && h < 1.0)) {
            return Err(Error::HurstOutOfRange(h));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Domain {
                what: "alpha",
                value: self.alpha,
            });
        }
        if !(self.scale > 0.0) {
            return Err(Error::Domain {
                what: "scale",
                value: self.scale,
            });
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        Ok(())
    }

    /// Explicit setting, else the environment, else all cores.
    pub fn thread_count(&self) -> usize {
        self.threads
            .or_else(|| {
                std::env::var(THREADS_ENV)
                    .ok()
                    .and_then(|v| v.parse().ok())
                    .filter(|&t| t > 0)
            })
            .unwrap_or_else(rayon::current_num_threads)
    }
}

/// One interval construction: method, filter and (for the scale-free
/// methods) the number of dilations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Procedure {
    pub method: Method,
    pub filter: String,
    pub m: Option<usize>,
}

impl Procedure {
    pub fn new(method: Method, filter: &str, m: Option<usize>) -> Result<Self> {
        parse_filter_spec(filter)?;
        let needs_m = matches!(method, Method::CiUnknown | Method::CltUnknown);
        match (needs_m, m) {
            (true, None) => Err(Error::Config(format!("{method} needs M"))),
            (true, Some(k)) if k < 2 => Err(Error::Design(format!("M = {k}, need at least 2"))),
            _ => Ok(Procedure {
                method,
                filter: filter.to_string(),
                m: if needs_m { m } else { None },
            }),
        }
    }

    /// Row label in the published layout, e.g. CI[i2] or CLT[d4,5].
    pub fn label(&self) -> String {
        let kind = match self.method {
            Method::CiKnown | Method::CiUnknown => "CI",
            Method::CltKnown | Method::CltUnknown => "CLT",
            Method::Bnp => "BNP",
        };
        match (self.method, self.m) {
            (Method::Bnp, _) => "BNP[i2]".to_string(),
            (_, Some(m)) => format!("{kind}[{},{m}]", self.filter),
            (_, None) => format!("{kind}[{}]", self.filter),
        }
    }

    /// Observations needed for sample size n (the baseline reads n + 2).
    fn path_len(&self, n: usize) -> usize {
        if self.method == Method::Bnp {
            n + 2
        } else {
            n
        }
    }

    /// Interval for one path; `scale` is the known C where the method uses it.
    pub fn evaluate(
        &self,
        path: &SamplePath,
        alpha: f64,
        scale: f64,
        h_star: f64,
    ) -> Result<ConfidenceInterval> {
        let filter = parse_filter_spec(&self.filter)?;
        self.evaluate_with(&filter, path, alpha, scale, h_star)
    }

    fn evaluate_with(
        &self,
        filter: &Filter,
        path: &SamplePath,
        alpha: f64,
        scale: f64,
        h_star: f64,
    ) -> Result<ConfidenceInterval> {
        let unit = || {
            if scale == 1.0 {
                path.clone()
            } else {
                path.scaled(1.0 / scale)
            }
        };
        match self.method {
            Method::CiKnown => ci_known_scale(&unit(), filter, alpha),
            Method::CltKnown => ci_clt_known(&unit(), filter, alpha),
            Method::Bnp => ci_bnp(&unit(), alpha, h_star),
            Method::CiUnknown => {
                let design = DilationDesign::centred_log(self.m.expect("validated"))?;
                ci_unknown_scale(path, filter, &design, alpha)
            }
            Method::CltUnknown => ci_clt_unknown(path, filter, self.m.expect("validated"), alpha),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageRecord {
    pub procedure: String,
    pub method: Method,
    pub filter: String,
    pub m: Option<usize>,
    pub n: usize,
    pub hurst: f64,
    pub scale: f64,
    pub alpha: f64,
    /// Percentage of feasible replications whose interval contains H.
    pub coverage: f64,
    pub mean_length: f64,
    /// Mean interval midpoint, the centre reported next to coverage.
    pub mean_estimator: f64,
    /// Mean of the method's own point estimate.
    pub mean_point_estimate: f64,
    pub replications: usize,
    pub feasible_rate: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct RepOutcome {
    feasible: bool,
    covered: bool,
    length: f64,
    midpoint: f64,
    estimate: f64,
}

fn outcome(ci: Result<ConfidenceInterval>, h: f64) -> RepOutcome {
    match ci {
        Ok(ci) if ci.feasible => RepOutcome {
            feasible: true,
            covered: ci.contains(h),
            length: ci.length(),
            midpoint: ci.midpoint(),
            estimate: ci.estimator.unwrap_or(f64::NAN),
        },
        _ => RepOutcome::default(),
    }
}

/// Sums in replication order, so the result does not depend on scheduling.
fn aggregate(
    proc_: &Procedure,
    n: usize,
    h: f64,
    scale: f64,
    alpha: f64,
    reps: &[RepOutcome],
) -> CoverageRecord {
    let feasible: Vec<&RepOutcome> = reps.iter().filter(|r| r.feasible).collect();
    let k = feasible.len();
    let mean = |f: &dyn Fn(&RepOutcome) -> f64| {
        if k == 0 {
            f64::NAN
        } else {
            feasible.iter().map(|r| f(r)).sum::<f64>() / k as f64
        }
    };
    CoverageRecord {
        procedure: proc_.label(),
        method: proc_.method,
        filter: proc_.filter.clone(),
        m: proc_.m,
        n,
        hurst: h,
        scale,
        alpha,
        coverage: if k == 0 {
            0.0
        } else {
            100.0 * feasible.iter().filter(|r| r.covered).count() as f64 / k as f64
        },
        mean_length: mean(&|r| r.length),
        mean_estimator: mean(&|r| r.midpoint),
        mean_point_estimate: mean(&|r| r.estimate),
        replications: reps.len(),
        feasible_rate: k as f64 / reps.len() as f64,
        wall_time_s: 0.0,
    }
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Settings for a single coverage run.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageSpec {
    pub procedure: Procedure,
    pub n: usize,
    pub hurst: f64,
    pub scale: f64,
    pub alpha: f64,
    pub replications: usize,
    pub seed: u64,
    pub threads: usize,
    pub h_star: f64,
}

/// Simulates `replications` paths and aggregates the intervals. Replication
/// r uses stream r of the seed, so any thread count gives the same record.
pub fn run_coverage(spec: &CoverageSpec) -> Result<CoverageRecord> {
    if spec.replications == 0 {
        return Err(Error::Config("replications must be at least 1".into()));
    }
    let start = Instant::now();
    let filter = parse_filter_spec(&spec.procedure.filter)?;
    let len = spec.procedure.path_len(spec.n);
    let cfg = SimConfig::new(spec.hurst, spec.scale, len, spec.seed).with_step(1.0 / spec.n as f64);
    let gen = FgnGenerator::new(cfg)?;
    let reps: Vec<RepOutcome> = pool(spec.threads)?.install(|| {
        (0..spec.replications as u64)
            .into_par_iter()
            .map(|r| {
                let path = gen.replication(r);
                outcome(
                    spec.procedure.evaluate_with(
                        &filter,
                        &path,
                        spec.alpha,
                        spec.scale,
                        spec.h_star,
                    ),
                    spec.hurst,
                )
            })
            .collect()
    });
    let mut rec = aggregate(
        &spec.procedure,
        spec.n,
        spec.hurst,
        spec.scale,
        spec.alpha,
        &reps,
    );
    rec.wall_time_s = start.elapsed().as_secs_f64();
    Ok(rec)
}

/// Seed for one (n, H) cell of a table, derived from the master seed.
pub fn cell_seed(seed: u64, n: usize, h: f64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(seed ^ mix(n as u64 ^ mix(h.to_bits())))
}

/// Runs several procedures on the same simulated paths for one (n, H) cell.
pub fn run_cell(
    procedures: &[Procedure],
    n: usize,
    h: f64,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<Vec<CoverageRecord>> {
    let start = Instant::now();
    let filters: Vec<Filter> = procedures
        .iter()
        .map(|p| parse_filter_spec(&p.filter))
        .collect::<Result<_>>()?;
    let plain = FgnGenerator::new(SimConfig::new(h, cfg.scale, n, seed))?;
    let needs_long = procedures.iter().any(|p| p.method == Method::Bnp);
    let long = if needs_long {
        Some(FgnGenerator::new(
            SimConfig::new(h, cfg.scale, n + 2, seed).with_step(1.0 / n as f64),
        )?)
    } else {
        None
    };
    let per_rep: Vec<Vec<RepOutcome>> = pool(cfg.thread_count())?.install(|| {
        (0..cfg.replications as u64)
            .into_par_iter()
            .map(|r| {
                let path = plain.replication(r);
                let long_path = long.as_ref().map(|g| g.replication(r));
                procedures
                    .iter()
                    .zip(&filters)
                    .map(|(p, f)| {
                        let src = if p.method == Method::Bnp {
                            long_path.as_ref().expect("built")
                        } else {
                            &path
                        };
                        outcome(p.evaluate_with(f, src, cfg.alpha, cfg.scale, cfg.h_star), h)
                    })
                    .collect()
            })
            .collect()
    });
    let elapsed = start.elapsed().as_secs_f64();
    Ok(procedures
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let column: Vec<RepOutcome> = per_rep.iter().map(|row| row[i]).collect();
            let mut rec = aggregate(p, n, h, cfg.scale, cfg.alpha, &column);
            rec.wall_time_s = elapsed;
            rec
        })
        .collect())
}
