//! Generators for the tables and the length-ratio figure. Each writes a CSV
//! whose first line is a versioned `#` header, and a JSON summary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::json;

use super::{cell_seed, run_cell, CoverageRecord, ExperimentConfig, Procedure, SCHEMA_VERSION};
use crate::concentration::{
    invert_nv_phi_l, invert_nv_phi_r, invert_phi_l_general, invert_phi_r_general,
    GeneralBoundParams,
};
use crate::error::{Error, Result};
use crate::filter_bank::{builtin_filter, dilate, sup_l1_norm, tau_a, Filter};
use crate::intervals::{length_ratio_profile, min_n_invertible, Method};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TableId {
    Concentration,
    Tau,
    SupL1,
    MinN,
    CoverageKnown,
    CoverageUnknown,
    LengthRatio,
}

impl TableId {
    pub const ALL: [TableId; 7] = [
        TableId::Concentration,
        TableId::Tau,
        TableId::SupL1,
        TableId::MinN,
        TableId::CoverageKnown,
        TableId::CoverageUnknown,
        TableId::LengthRatio,
    ];

    pub fn parse(s: &str) -> Result<TableId> {
        let t = s.trim().to_ascii_lowercase();
        let t = t.strip_prefix("table").unwrap_or(&t);
        Ok(match t {
            "1" => TableId::Concentration,
            "2" => TableId::Tau,
            "3" => TableId::SupL1,
            "4" => TableId::MinN,
            "5" => TableId::CoverageKnown,
            "6" => TableId::CoverageUnknown,
            "fig1" | "figure1" => TableId::LengthRatio,
            _ => return Err(Error::UnknownTable(s.to_string())),
        })
    }

    pub fn tag(&self) -> &'static str {
        match self {
            TableId::Concentration => "1",
            TableId::Tau => "2",
            TableId::SupL1 => "3",
            TableId::MinN => "4",
            TableId::CoverageKnown => "5",
            TableId::CoverageUnknown => "6",
            TableId::LengthRatio => "fig1",
        }
    }

    fn file_stem(&self) -> String {
        match self {
            TableId::LengthRatio => "fig1".into(),
            _ => format!("table{}", self.tag()),
        }
    }

    fn needs_seed(&self) -> bool {
        matches!(self, TableId::CoverageKnown | TableId::CoverageUnknown)
    }
}

#[derive(Debug, Clone)]
pub struct TableOutput {
    pub id: TableId,
    pub csv: String,
    pub json: serde_json::Value,
}

const TABLE_N: [usize; 5] = [50, 100, 500, 1000, 10000];
const TABLE_H: [f64; 3] = [0.2, 0.5, 0.8];
const TABLE1_ALPHA: [f64; 4] = [0.01, 0.025, 0.05, 0.10];
const DILATIONS: [usize; 5] = [1, 2, 3, 4, 5];
const TAU_FILTERS: [&str; 9] = ["i2", "d4", "c6", "i3", "d6", "i4", "d8", "s8", "c12"];
const SUP_FILTERS: [&str; 9] = ["i1", "i2", "d4", "c6", "i3", "d6", "i4", "d8", "c12"];

fn or_default<T: Clone>(given: &[T], fallback: &[T]) -> Vec<T> {
    if given.is_empty() {
        fallback.to_vec()
    } else {
        given.to_vec()
    }
}

fn filters_or(cfg: &ExperimentConfig, fallback: &[&str]) -> Result<Vec<Filter>> {
    let names: Vec<String> = if cfg.filters.is_empty() {
        fallback.iter().map(|s| s.to_string()).collect()
    } else {
        cfg.filters.clone()
    };
    names.iter().map(|n| builtin_filter(n)).collect()
}

fn header(id: TableId, cfg: &ExperimentConfig, columns: &str) -> String {
    let mut h = format!("# hurst-ci table={} schema={SCHEMA_VERSION}", id.tag());
    if id.needs_seed() {
        let _ = write!(
            h,
            " alpha={} reps={} scale={} seed={}",
            cfg.alpha,
            cfg.replications,
            cfg.scale,
            cfg.seed.unwrap_or_default()
        );
    }
    if id == TableId::LengthRatio {
        let _ = write!(h, " alpha={}", cfg.alpha);
    }
    format!("{h}\n{columns}\n")
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Builds one table in memory. Deterministic for a fixed configuration.
pub fn run_table(id: TableId, cfg: &ExperimentConfig) -> Result<TableOutput> {
    cfg.validate()?;
    if id.needs_seed() && cfg.seed.is_none() {
        return Err(Error::Config(format!("table {} needs a seed", id.tag())));
    }
    let start = Instant::now();
    let (csv, rows) = match id {
        TableId::Concentration => table1(cfg)?,
        TableId::Tau => table2(cfg)?,
        TableId::SupL1 => table3(cfg)?,
        TableId::MinN => table4(cfg)?,
        TableId::CoverageKnown | TableId::CoverageUnknown => coverage_table(id, cfg)?,
        TableId::LengthRatio => figure1(cfg)?,
    };
    let json = json!({
        "table": id.tag(),
        "schema": SCHEMA_VERSION,
        "config": cfg,
        "rows": rows,
        "wall_time_s": start.elapsed().as_secs_f64(),
    });
    Ok(TableOutput { id, csv, json })
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir` and returns both paths.
pub fn write_table(id: TableId, cfg: &ExperimentConfig, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let out = run_table(id, cfg)?;
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{}.csv", id.file_stem()));
    let json_path = dir.join(format!("{}.json", id.file_stem()));
    std::fs::write(&csv_path, &out.csv)?;
    let text = serde_json::to_string_pretty(&out.json).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(&json_path, text + "\n")?;
    Ok((csv_path, json_path))
}

type Built = (String, serde_json::Value);

/// Quantiles of the earlier Gaussian-tail bound and of the new bound, both in
/// the general (a, b) form with a = 4/sqrt(n), b = 4 before doubling.
fn table1(cfg: &ExperimentConfig) -> Result<Built> {
    let mut csv = header(
        TableId::Concentration,
        cfg,
        "n,alpha,nv_left,nv_right,new_left,new_right",
    );
    let mut rows = Vec::new();
    for n in or_default(&cfg.n, &TABLE_N) {
        let p = GeneralBoundParams::from_nv_parametrisation(4.0 / (n as f64).sqrt(), 4.0)?;
        for alpha in TABLE1_ALPHA {
            let r = [
                invert_nv_phi_l(alpha, &p)?,
                invert_nv_phi_r(alpha, &p)?,
                invert_phi_l_general(alpha, &p)?,
                invert_phi_r_general(alpha, &p)?,
            ];
            let _ = writeln!(csv, "{n},{alpha},{},{},{},{}", r[0], r[1], r[2], r[3]);
            rows.push(json!({"n": n, "alpha": alpha, "nv": [r[0], r[1]], "new": [r[2], r[3]]}));
        }
    }
    Ok((csv, json!(rows)))
}

fn dilations(cfg: &ExperimentConfig) -> Vec<usize> {
    or_default(&cfg.m, &DILATIONS)
}

fn table2(cfg: &ExperimentConfig) -> Result<Built> {
    let mut csv = header(TableId::Tau, cfg, "filter,m,tau");
    let mut rows = Vec::new();
    for f in filters_or(cfg, &TAU_FILTERS)? {
        for m in dilations(cfg) {
            let tau = tau_a(&dilate(&f, m));
            let _ = writeln!(csv, "{},{m},{tau}", f.name());
            rows.push(json!({"filter": f.name(), "m": m, "tau": tau}));
        }
    }
    Ok((csv, json!(rows)))
}

fn table3(cfg: &ExperimentConfig) -> Result<Built> {
    let mut csv = header(TableId::SupL1, cfg, "filter,m,sup_l1,argmax_h");
    let mut rows = Vec::new();
    for f in filters_or(cfg, &SUP_FILTERS)? {
        for m in dilations(cfg) {
            let s = sup_l1_norm(&dilate(&f, m))?;
            let _ = writeln!(csv, "{},{m},{},{}", f.name(), s.value, s.h);
            rows.push(json!({"filter": f.name(), "m": m, "sup_l1": s.value, "argmax_h": s.h}));
        }
    }
    Ok((csv, json!(rows)))
}

fn table4(cfg: &ExperimentConfig) -> Result<Built> {
    let mut csv = header(TableId::MinN, cfg, "filter,m,min_n");
    let mut rows = Vec::new();
    for f in filters_or(cfg, &TAU_FILTERS)? {
        for m in dilations(cfg) {
            let n = min_n_invertible(&dilate(&f, m))?;
            let _ = writeln!(csv, "{},{m},{n}", f.name());
            rows.push(json!({"filter": f.name(), "m": m, "min_n": n}));
        }
    }
    Ok((csv, json!(rows)))
}

/// Procedures compared in the coverage tables, in row order.
pub fn coverage_procedures(id: TableId, cfg: &ExperimentConfig) -> Result<Vec<Procedure>> {
    let filters = if cfg.filters.is_empty() {
        vec!["i2".to_string(), "d4".to_string()]
    } else {
        cfg.filters.clone()
    };
    let mut out = Vec::new();
    for f in &filters {
        match id {
            TableId::CoverageKnown => {
                out.push(Procedure::new(Method::CiKnown, f, None)?);
                out.push(Procedure::new(Method::CltKnown, f, None)?);
            }
            TableId::CoverageUnknown => {
                for m in or_default(&cfg.m, &[2, 5]) {
                    out.push(Procedure::new(Method::CltUnknown, f, Some(m))?);
                    out.push(Procedure::new(Method::CiUnknown, f, Some(m))?);
                }
            }
            _ => return Err(Error::UnknownTable(id.tag().into())),
        }
    }
    Ok(out)
}

fn coverage_table(id: TableId, cfg: &ExperimentConfig) -> Result<Built> {
    let procedures = coverage_procedures(id, cfg)?;
    let seed = cfg.seed.expect("checked by caller");
    let mut records: Vec<CoverageRecord> = Vec::new();
    for n in or_default(&cfg.n, &TABLE_N) {
        for h in or_default(&cfg.hurst, &TABLE_H) {
            records.extend(run_cell(&procedures, n, h, cfg, cell_seed(seed, n, h))?);
        }
    }
    let mut csv = header(
        id,
        cfg,
        "procedure,method,filter,M,n,H,coverage,mean_length,mean_estimator,mean_point_estimate,replications,feasible_rate",
    );
    for r in &records {
        let _ = writeln!(
            csv,
            "\"{}\",{},{},{},{},{},{},{},{},{},{},{}",
            r.procedure,
            r.method,
            r.filter,
            opt(r.m),
            r.n,
            r.hurst,
            r.coverage,
            r.mean_length,
            r.mean_estimator,
            r.mean_point_estimate,
            r.replications,
            r.feasible_rate
        );
    }
    Ok((csv, json!(records)))
}

fn figure1(cfg: &ExperimentConfig) -> Result<Built> {
    let grid: Vec<f64> = if cfg.hurst.is_empty() {
        (1..100).map(|i| i as f64 / 100.0).collect()
    } else {
        cfg.hurst.clone()
    };
    let mut csv = header(
        TableId::LengthRatio,
        cfg,
        "case,filter,M,H,ci_constant,clt_constant,ratio",
    );
    let mut rows = Vec::new();
    let cases: Vec<Option<usize>> = std::iter::once(None)
        .chain(or_default(&cfg.m, &[2, 5]).into_iter().map(Some))
        .collect();
    for f in filters_or(cfg, &["i2", "d4"])? {
        for &m in &cases {
            let case = if m.is_some() { "unknown" } else { "known" };
            for r in length_ratio_profile(&f, m, cfg.alpha, &grid)? {
                let _ = writeln!(
                    csv,
                    "{case},{},{},{},{},{},{}",
                    f.name(),
                    opt(m),
                    r.h,
                    r.ci_constant,
                    r.clt_constant,
                    r.ratio
                );
                rows.push(json!({"case": case, "filter": f.name(), "M": m, "row": r}));
            }
        }
    }
    Ok((csv, json!(rows)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_ids_round_trip() {
        for id in TableId::ALL {
            assert_eq!(TableId::parse(id.tag()).unwrap(), id);
        }
        assert_eq!(TableId::parse("table3").unwrap(), TableId::SupL1);
        assert!(TableId::parse("7").is_err());
    }

    #[test]
    fn coverage_tables_need_a_seed() {
        let cfg = ExperimentConfig::default();
        assert!(matches!(
            run_table(TableId::CoverageKnown, &cfg),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn deterministic_small_table() {
        let cfg = ExperimentConfig {
            replications: 8,
            n: vec![64],
            hurst: vec![0.3],
            seed: Some(3),
            ..Default::default()
        };
        let a = run_table(TableId::CoverageKnown, &cfg).unwrap();
        let b = run_table(
            TableId::CoverageKnown,
            &ExperimentConfig {
                threads: Some(1),
                ..cfg
            },
        )
        .unwrap();
        assert_eq!(a.csv, b.csv);
        assert!(a.csv.starts_with("# hurst-ci table=5 schema=1"));
        assert_eq!(a.csv.lines().count(), 2 + 4);
    }

    #[test]
    fn min_n_table_shape() {
        let cfg = ExperimentConfig {
            filters: vec!["i2".into()],
            ..Default::default()
        };
        let out = run_table(TableId::MinN, &cfg).unwrap();
        let body: Vec<&str> = out.csv.lines().skip(2).collect();
        // exp(sup f) stays below l*m + 1, so the support length decides
        assert_eq!(body, ["i2,1,3", "i2,2,5", "i2,3,7", "i2,4,9", "i2,5,11"]);
    }
}
