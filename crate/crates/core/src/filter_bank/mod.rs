//! Filters, dilations, covariance and correlation of filtered fBm, and the
//! H-uniform l1 constants kappa.

mod closed_form;
mod kappa;
mod kernel;

use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{Error, Result};
use kernel::{LagKernel, Series};

pub use closed_form::{rho_l1_exact, rho_l1_exact_left_limit, DilatedIncrement};
pub use kappa::{kappa, kappa_uncached, sup_l1_norm, SupLocation};

/// Absolute tolerance on vanishing moments when detecting the order.
pub const MOMENT_TOL: f64 = 1e-10;
/// Default relative tolerance for truncated norm sums.
pub const DEFAULT_REL_TOL: f64 = 1e-10;

const FILTER_TABLE: &str = include_str!("../../data/filters.csv");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Filter {
    name: String,
    coeffs: Vec<f64>,
    order: usize,
}

impl Filter {
    /// Build a filter, trimming leading and trailing zeros and detecting its order.
    pub fn new(name: impl Into<String>, coeffs: &[f64]) -> Result<Self> {
        let coeffs = trim_zeros(coeffs);
        if coeffs.len() < 2 {
            return Err(Error::TooShort);
        }
        let order = detect_order(&coeffs)?;
        Ok(Filter {
            name: name.into(),
            coeffs,
            order,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Order p: number of vanishing moments.
    pub fn order(&self) -> usize {
        self.order
    }

    /// ell, the filter length minus one.
    pub fn ell(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Upper end of the H range on which kappa is taken: 1/2 for p = 1, else 1.
    pub fn h_domain_max(&self) -> f64 {
        if self.order == 1 {
            0.5
        } else {
            1.0
        }
    }

    pub fn alpha(&self) -> AlphaProfile {
        AlphaProfile::of(self)
    }

    fn kernel(&self) -> LagKernel {
        let a = self.alpha();
        let ell = a.ell as i64;
        LagKernel::new((-ell..=ell).map(|j| (j, a.get(j))), self.order)
    }
}

fn trim_zeros(c: &[f64]) -> Vec<f64> {
    let first = c.iter().position(|&x| x != 0.0);
    let last = c.iter().rposition(|&x| x != 0.0);
    match (first, last) {
        (Some(f), Some(l)) => c[f..=l].to_vec(),
        _ => Vec::new(),
    }
}

/// Largest p such that the moments of order < p vanish.
pub fn detect_order(coeffs: &[f64]) -> Result<usize> {
    let ell = coeffs.len().saturating_sub(1);
    for j in 0..=ell {
        let m: f64 = coeffs
            .iter()
            .enumerate()
            .map(|(q, &a)| a * (q as f64).powi(j as i32))
            .sum();
        if m.abs() > MOMENT_TOL {
            if j == 0 {
                return Err(Error::InvalidOrder(0));
            }
            return Ok(j);
        }
    }
    Err(Error::DegenerateFilter)
}

/// Signed binomial difference filter of order p, (-1)^{p-q} binom(p, q).
pub fn make_increment_filter(p: usize) -> Result<Filter> {
    if p == 0 {
        return Err(Error::InvalidOrder(0));
    }
    let mut c = vec![0.0; p + 1];
    let mut binom = 1.0;
    for (q, slot) in c.iter_mut().enumerate() {
        let sign = if (p - q).is_multiple_of(2) { 1.0 } else { -1.0 };
        *slot = sign * binom;
        binom = binom * (p - q) as f64 / (q + 1) as f64;
    }
    Ok(Filter {
        name: format!("i{p}"),
        coeffs: c,
        order: p,
    })
}

/// A row of the shipped coefficient table.
#[derive(Debug, Clone)]
pub struct FilterRecord {
    pub name: String,
    pub order: usize,
    pub coeffs: Vec<f64>,
    pub source: String,
}

/// Parse a filter table: `name,p,c_0,...,c_l,source` per line, `#` comments.
pub fn parse_filter_table(text: &str) -> Result<Vec<FilterRecord>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = |reason: &str| Error::FilterTable {
            line: i + 1,
            reason: reason.to_string(),
        };
        if fields.len() < 5 {
            return Err(bad(
                "expected name, order, at least two coefficients and a source",
            ));
        }
        let order = fields[1]
            .parse::<usize>()
            .map_err(|_| bad("order is not an integer"))?;
        let coeffs = fields[2..fields.len() - 1]
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| bad("coefficient is not a number"))?;
        out.push(FilterRecord {
            name: fields[0].to_string(),
            order,
            coeffs,
            source: fields[fields.len() - 1].to_string(),
        });
    }
    Ok(out)
}

pub fn builtin_table() -> &'static [FilterRecord] {
    static TABLE: OnceLock<Vec<FilterRecord>> = OnceLock::new();
    TABLE.get_or_init(|| parse_filter_table(FILTER_TABLE).expect("shipped filter table parses"))
}

/// Look up a shipped filter by name (i1..i4, d4, d6, d8, s8, c6, c12).
pub fn builtin_filter(name: &str) -> Result<Filter> {
    let rec = builtin_table()
        .iter()
        .find(|r| r.name == name)
        .ok_or_else(|| Error::UnknownFilter(name.to_string()))?;
    Filter::new(rec.name.clone(), &rec.coeffs)
}

/// Parse `name` or `name^m` into a (possibly dilated) builtin filter.
pub fn parse_filter_spec(spec: &str) -> Result<Filter> {
    match spec.split_once('^') {
        Some((base, m)) => {
            let m: usize = m
                .parse()
                .map_err(|_| Error::UnknownFilter(spec.to_string()))?;
            if m == 0 {
                return Err(Error::UnknownFilter(spec.to_string()));
            }
            Ok(dilate(&builtin_filter(base)?, m))
        }
        None => builtin_filter(spec),
    }
}

/// The dilated filter a^m: a_{i/m} at multiples of m, zero elsewhere.
pub fn dilate(filter: &Filter, m: usize) -> Filter {
    assert!(m >= 1, "dilation factor must be at least 1");
    if m == 1 {
        return filter.clone();
    }
    let mut c = vec![0.0; filter.ell() * m + 1];
    for (q, &a) in filter.coeffs.iter().enumerate() {
        c[q * m] = a;
    }
    Filter {
        name: format!("{}^{}", filter.name, m),
        coeffs: c,
        order: filter.order,
    }
}

/// alpha_j = sum_{q - r = j} a_q a_r for j = -ell..=ell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaProfile {
    ell: usize,
    values: Vec<f64>,
}

impl AlphaProfile {
    pub fn of(filter: &Filter) -> Self {
        let a = &filter.coeffs;
        let ell = a.len() - 1;
        let mut values = vec![0.0; 2 * ell + 1];
        for (q, &aq) in a.iter().enumerate() {
            for (r, &ar) in a.iter().enumerate() {
                values[q + ell - r] += aq * ar;
            }
        }
        AlphaProfile { ell, values }
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn get(&self, j: i64) -> f64 {
        let idx = j + self.ell as i64;
        if idx < 0 || idx as usize >= self.values.len() {
            0.0
        } else {
            self.values[idx as usize]
        }
    }

    /// (j, alpha_j) pairs from -ell to ell.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let ell = self.ell as i64;
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (i as i64 - ell, v))
    }
}

fn check_h(h: f64) -> Result<()> {
    if (0.0..=1.0).contains(&h) {
        Ok(())
    } else {
        Err(Error::HurstOutOfRange(h))
    }
}

/// pi_H^a(j) = -1/2 sum_{q,r} a_q a_r |q - r + j|^{2H}, with |0|^{2H} = 0.
pub fn pi(filter: &Filter, h: f64, j: i64) -> f64 {
    let k = filter.kernel();
    let v = k.value(h, j);
    if k.is_reduced() {
        -0.5 * (2.0 * h - 2.0) * v
    } else {
        -0.5 * v
    }
}

/// rho_H^a(j) = pi_H^a(j) / pi_H^a(0); at H = 1 (p >= 2) the l'Hopital limit.
pub fn rho(filter: &Filter, h: f64, j: i64) -> Result<f64> {
    check_h(h)?;
    let k = filter.kernel();
    let v0 = k.value(h, 0);
    if v0 == 0.0 {
        return Err(Error::UndefinedLimit);
    }
    Ok(k.value(h, j) / v0)
}

/// tau^a = sum_{q,r} a_q a_r (q - r)^2 log|q - r|.
pub fn tau_a(filter: &Filter) -> f64 {
    filter
        .alpha()
        .iter()
        .filter(|&(j, _)| j != 0)
        .map(|(j, a)| {
            let x = j.abs() as f64;
            a * x * x * x.ln()
        })
        .sum()
}

/// Correlations at fixed H with their l1 and l2 norms.
#[derive(Debug, Clone, Serialize)]
pub struct CorrelationProfile {
    pub filter: String,
    pub hurst: f64,
    /// rho(j) for j = 0..=truncation_lag; negative lags by symmetry.
    pub values: Vec<f64>,
    pub l1_norm: f64,
    pub l2_norm_sq: f64,
    /// Lags beyond this are summed analytically.
    pub truncation_lag: usize,
    /// Analytic value of the two-sided l1 tail beyond the truncation lag.
    pub tail_l1: f64,
    /// Bound on the error of the analytic tail.
    pub tail_bound: f64,
}

impl CorrelationProfile {
    pub fn value(&self, lag: i64) -> Option<f64> {
        self.values.get(lag.unsigned_abs() as usize).copied()
    }
}

/// Shared core: direct sums to a lag past which the kernel has a fixed sign,
/// then analytic tails.
fn profile_core(filter: &Filter, h: f64, rel_tol: f64, left_limit: bool) -> CorrelationProfile {
    let k = filter.kernel();
    let r = k.radius();
    let mut big_j = 4 * r + 4;
    loop {
        let table = k.g_table(h, big_j + r);
        let v0 = k.value_from(&table, 0);
        let raw: Vec<f64> = (0..=big_j as i64)
            .map(|j| k.value_from(&table, j))
            .collect();
        let order = Series::order_for(r, big_j + 1);
        let series = k.series(h, 1, order);
        let sign_fixed = series.dominates_from(big_j + 1);
        if !sign_fixed && big_j < (1 << 22) {
            big_j *= 2;
            continue;
        }
        let tail = series.tail_sum(big_j, left_limit);
        let tail_sq = if h < 0.75 || k.is_reduced() {
            series.tail_sum_sq(big_j)
        } else {
            f64::INFINITY
        };
        let rem = series.tail_remainder(big_j);
        let abs_sum: f64 = raw[1..].iter().map(|v| v.abs()).sum();
        let sq_sum: f64 = raw[1..].iter().map(|v| v * v).sum();
        let l1 = 1.0 + 2.0 * (abs_sum + tail.abs()) / v0.abs();
        let l2 = 1.0 + 2.0 * (sq_sum + tail_sq) / (v0 * v0);
        let tail_bound = 2.0 * rem / v0.abs();
        debug_assert!(tail_bound <= rel_tol.max(1e-15) * l1 || big_j >= (1 << 22));
        return CorrelationProfile {
            filter: filter.name.clone(),
            hurst: h,
            values: raw.iter().map(|v| v / v0).collect(),
            l1_norm: l1,
            l2_norm_sq: l2,
            truncation_lag: big_j,
            tail_l1: 2.0 * tail.abs() / v0.abs(),
            tail_bound,
        };
    }
}

/// sum_j |rho_H^a(j)| with an analytic tail; also fills the l2 norm.
pub fn rho_l1_norm(filter: &Filter, h: f64, rel_tol: f64) -> Result<CorrelationProfile> {
    check_h(h)?;
    if filter.order == 1 && h > 0.5 {
        return Err(Error::NonSummable(h));
    }
    Ok(profile_core(filter, h, rel_tol, false))
}

/// As [`rho_l1_norm`], but for p = 1 at H = 1/2 returns the limit from below.
pub(crate) fn rho_l1_norm_left(filter: &Filter, h: f64) -> f64 {
    profile_core(filter, h, DEFAULT_REL_TOL, filter.order == 1 && h == 0.5).l1_norm
}

/// sum_j rho_H^a(j)^2.
pub fn rho_l2_norm_sq(filter: &Filter, h: f64, _rel_tol: f64) -> Result<f64> {
    check_h(h)?;
    cross_l2_norm_sq(filter, 1, 1, h)
}

fn cross_kernel(filter: &Filter, m1: usize, m2: usize) -> LagKernel {
    let a = &filter.coeffs;
    let mut terms = Vec::with_capacity(a.len() * a.len());
    for (q, &aq) in a.iter().enumerate() {
        for (r, &ar) in a.iter().enumerate() {
            terms.push(((m1 * q) as i64 - (m2 * r) as i64, aq * ar));
        }
    }
    LagKernel::new(terms, filter.order)
}

fn cross_norm(filter: &Filter, m1: usize, m2: usize, h: f64) -> (LagKernel, f64) {
    let k = cross_kernel(filter, m1, m2);
    let v1 = cross_kernel(filter, m1, m1).value(h, 0);
    let v2 = cross_kernel(filter, m2, m2).value(h, 0);
    let sign = if k.is_reduced() { 1.0 } else { -1.0 };
    (k, sign / (v1 * v2).sqrt())
}

/// Cross-correlation of the a^{m1}- and a^{m2}-filtered series at lag i.
pub fn cross_rho(filter: &Filter, m1: usize, m2: usize, h: f64, i: i64) -> f64 {
    let (k, scale) = cross_norm(filter, m1, m2, h);
    scale * k.value(h, i)
}

/// sum_i cross_rho(a, m1, m2, H, i)^2.
pub fn cross_l2_norm_sq(filter: &Filter, m1: usize, m2: usize, h: f64) -> Result<f64> {
    check_h(h)?;
    if filter.order == 1 && h >= 0.75 {
        return Err(Error::NonSquareSummable(h));
    }
    let (k, scale) = cross_norm(filter, m1, m2, h);
    let r = k.radius();
    let big_j = 4 * r + 4;
    let table = k.g_table(h, big_j + r);
    let mut direct = 0.0;
    for i in -(big_j as i64)..=big_j as i64 {
        let v = k.value_from(&table, i);
        direct += v * v;
    }
    let order = Series::order_for(r, big_j + 1);
    let tails =
        k.series(h, 1, order).tail_sum_sq(big_j) + k.series(h, -1, order).tail_sum_sq(big_j);
    Ok(scale * scale * (direct + tails))
}
