//! Confidence intervals for H: the concentration intervals with known and
//! unknown scale, the second-difference baseline, and CLT intervals.

mod bnp;
mod clt;

pub use bnp::{
    bnp_h_star_max, bnp_min_feasible_n, bnp_q_n, bnp_statistic, ci_bnp, gn_bnp, gn_bnp_inverse,
};
pub use clt::{
    ci_clt_known, ci_clt_unknown, estimator_gen, length_ratio_profile, normal_quantile, sigma_gen,
    sigma_std, LengthRatioRow,
};

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use serde::Serialize;

use crate::concentration::{invert_phi_l, invert_phi_r, q_asymptotic, ConcentrationBound};
use crate::error::{Error, Result};
use crate::fbm_sim::SamplePath;
use crate::filter_bank::{dilate, kappa, pi, Filter};
use crate::numerics::{bisect_increasing, golden_section_max};
use crate::statistics::quadratic_variation;

const GN_TOL: f64 = 1e-12;
const SUP_GRID: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    CiKnown,
    CiUnknown,
    Bnp,
    CltKnown,
    CltUnknown,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::CiKnown,
        Method::CiUnknown,
        Method::Bnp,
        Method::CltKnown,
        Method::CltUnknown,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            Method::CiKnown => "ci-known",
            Method::CiUnknown => "ci-unknown",
            Method::Bnp => "bnp",
            Method::CltKnown => "clt-known",
            Method::CltUnknown => "clt-unknown",
        }
    }

    pub fn parse(s: &str) -> Result<Method> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.tag() == s)
            .ok_or_else(|| Error::Config(format!("unknown method '{s}'")))
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// Values that went into an interval.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    /// S_n for each filter used (one per dilation for the unknown-scale case).
    pub s_n: Vec<f64>,
    pub q_left: Vec<f64>,
    pub q_right: Vec<f64>,
    pub kappa: Vec<f64>,
    /// Endpoint hit the lower/upper limit.
    pub clamped_low: bool,
    pub clamped_high: bool,
    pub sigma: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub method: Method,
    /// When false the endpoints are placeholders (0, 1).
    pub feasible: bool,
    pub estimator: Option<f64>,
    pub diagnostics: Diagnostics,
}

impl ConfidenceInterval {
    fn infeasible(method: Method, alpha: f64, note: String) -> Self {
        ConfidenceInterval {
            lower: 0.0,
            upper: 1.0,
            level: 1.0 - alpha,
            method,
            feasible: false,
            estimator: None,
            diagnostics: Diagnostics {
                note: Some(note),
                ..Default::default()
            },
        }
    }

    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn contains(&self, h: f64) -> bool {
        self.feasible && self.lower <= h && h <= self.upper
    }
}

/// Clamp both raw endpoints into [0, cap], recording which side was hit.
fn clamp_endpoints(lo: f64, hi: f64, cap: f64, diag: &mut Diagnostics) -> (f64, f64) {
    diag.clamped_low = lo <= 0.0;
    diag.clamped_high = hi >= cap;
    (lo.clamp(0.0, cap), hi.clamp(0.0, cap))
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "alpha",
            value: alpha,
        })
    }
}

/// g_n(x) = 2x log n - log pi_x(0).
pub fn gn(x: f64, filter: &Filter, n: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain {
            what: "x",
            value: x,
        });
    }
    let p0 = pi(filter, x, 0);
    if p0 < 0.0 || (p0 == 0.0 && x < 1.0) {
        return Err(Error::Domain {
            what: "pi_x(0)",
            value: p0,
        });
    }
    Ok(2.0 * x * (n as f64).ln() - p0.ln())
}

/// sum_j alpha_j log|j| |j|^{2x} / sum_j alpha_j |j|^{2x}; g_n' = 2 (log n - f).
fn log_slope(filter: &Filter, x: f64) -> f64 {
    let e = 2.0 * x;
    let mut num = 0.0;
    for (j, a) in filter.alpha().iter() {
        if j != 0 {
            let y = j.unsigned_abs() as f64;
            num += a * y.ln() * y.powf(e);
        }
    }
    // denominator sum alpha |j|^{2x} = -2 pi_x(0), computed stably near x = 1
    num / (-2.0 * pi(filter, x, 0))
}

/// sup over (0, 1) of the log-slope above, with the location.
pub fn gn_slope_sup(filter: &Filter) -> Result<(f64, f64)> {
    let tau = crate::filter_bank::tau_a(filter);
    if tau < 0.0 {
        return Err(Error::UnsupportedFilter(format!(
            "{}: sum a_q a_r (q-r)^2 log|q-r| = {tau} < 0",
            filter.name()
        )));
    }
    let step = 1.0 / SUP_GRID as f64;
    let top = if filter.order() >= 2 {
        SUP_GRID - 1
    } else {
        SUP_GRID
    };
    let (mut best_i, mut best) = (0usize, f64::NEG_INFINITY);
    for i in 0..=top {
        let v = log_slope(filter, i as f64 * step);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let lo = best_i.saturating_sub(1) as f64 * step;
    let hi = ((best_i + 1).min(top) as f64) * step;
    let (xr, vr) = golden_section_max(|x| log_slope(filter, x), lo, hi, 1e-10);
    Ok(if vr > best {
        (xr, vr)
    } else {
        (best_i as f64 * step, best)
    })
}

/// Smallest n >= l + 1 for which g_n is increasing on (0, 1). Memoised on
/// the coefficient bits.
pub fn min_n_invertible(filter: &Filter) -> Result<usize> {
    static CACHE: OnceLock<RwLock<HashMap<Vec<u64>, usize>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key: Vec<u64> = filter.coeffs().iter().map(|c| c.to_bits()).collect();
    if let Some(&v) = cache.read().expect("min-n cache poisoned").get(&key) {
        return Ok(v);
    }
    let (_, sup) = gn_slope_sup(filter)?;
    let bound = sup.exp().ceil();
    let v = (filter.ell() + 1).max(if bound.is_finite() && bound > 0.0 {
        bound as usize
    } else {
        0
    });
    cache.write().expect("min-n cache poisoned").insert(key, v);
    Ok(v)
}

/// Result of inverting g_n, with the side on which y left the image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GnInverse {
    Interior(f64),
    BelowImage,
    AboveImage,
}

impl GnInverse {
    /// 0 and 1 for the two out-of-image signals.
    pub fn value(&self) -> f64 {
        match *self {
            GnInverse::Interior(x) => x,
            GnInverse::BelowImage => 0.0,
            GnInverse::AboveImage => 1.0,
        }
    }
}

/// Bisection for g_n(x) = y on [0, 1].
pub fn gn_inverse(y: f64, filter: &Filter, n: usize) -> GnInverse {
    let g = |x: f64| gn(x, filter, n).unwrap_or(f64::INFINITY);
    if y <= g(0.0) {
        return GnInverse::BelowImage;
    }
    let top = 1.0 - GN_TOL;
    if y >= g(top) {
        return GnInverse::AboveImage;
    }
    GnInverse::Interior(bisect_increasing(g, y, 0.0, top, GN_TOL))
}

/// x_l and x_r for a filter with kappa at effective size n_eff and level alpha.
fn x_bounds(kappa_a: f64, n_eff: usize, alpha: f64) -> Result<(f64, f64, f64, f64)> {
    let b = ConcentrationBound::new(kappa_a, n_eff)?;
    let ql = invert_phi_l(alpha, &b)?;
    let qr = invert_phi_r(alpha, &b)?;
    let sn = (n_eff as f64).sqrt();
    Ok((1.0 - ql / sn, 1.0 + qr / sn, ql, qr))
}

/// Plug-in estimator g_n^{-1}(-log S_n), clamped to [0, 1].
pub fn estimator_std(path: &SamplePath, filter: &Filter) -> Result<f64> {
    let n = path.n();
    let needed = min_n_invertible(filter)?;
    if n < needed {
        return Err(Error::InsufficientData { needed, got: n });
    }
    let s = quadratic_variation(path, filter)?.s_n;
    Ok(gn_inverse(-s.ln(), filter, n).value())
}

/// Known-scale interval (C = 1; divide the path by C beforehand otherwise).
pub fn ci_known_scale(
    path: &SamplePath,
    filter: &Filter,
    alpha: f64,
) -> Result<ConfidenceInterval> {
    check_alpha(alpha)?;
    let n = path.n();
    let needed = min_n_invertible(filter)?;
    if n < needed {
        return Ok(ConfidenceInterval::infeasible(
            Method::CiKnown,
            alpha,
            format!("n = {n} below the minimal size {needed}"),
        ));
    }
    let k = kappa(filter)?;
    let ell = filter.ell();
    let (xl, xr, ql, qr) = x_bounds(k, n - ell, alpha / 2.0)?;
    let s = quadratic_variation(path, filter)?.s_n;
    let ls = s.ln();
    let lo = gn_inverse(xl.ln() - ls, filter, n).value();
    let hi = gn_inverse(xr.ln() - ls, filter, n).value();
    let mut diagnostics = Diagnostics {
        s_n: vec![s],
        q_left: vec![ql],
        q_right: vec![qr],
        kappa: vec![k],
        ..Default::default()
    };
    let (lower, upper) = clamp_endpoints(lo, hi, filter.h_domain_max(), &mut diagnostics);
    Ok(ConfidenceInterval {
        lower,
        upper,
        level: 1.0 - alpha,
        method: Method::CiKnown,
        feasible: true,
        estimator: Some(gn_inverse(-ls, filter, n).value()),
        diagnostics,
    })
}

/// Contrast vector d over dilations 1..=M.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DilationDesign {
    d: Vec<f64>,
}

impl DilationDesign {
    pub fn new(d: Vec<f64>) -> Result<Self> {
        let design = DilationDesign { d };
        design.validate()?;
        Ok(design)
    }

    /// d = A = L_M - mean(L_M).
    pub fn centred_log(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::Design(format!("M = {m}, need at least 2")));
        }
        DilationDesign::new(centred_log_vector(m))
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.d.len();
        if m < 2 {
            return Err(Error::Design(format!("M = {m}, need at least 2")));
        }
        if self.d.iter().any(|&x| x == 0.0 || !x.is_finite()) {
            return Err(Error::Design(
                "components must be finite and non-zero".into(),
            ));
        }
        let scale: f64 = self.d.iter().map(|x| x.abs()).sum();
        let total: f64 = self.d.iter().sum();
        if total.abs() > 1e-12 * scale {
            return Err(Error::Design(format!("components sum to {total}, not 0")));
        }
        if self.dot_log() <= 0.0 {
            return Err(Error::Design("d'L_M must be positive".into()));
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.d.len()
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn log_m(&self) -> Vec<f64> {
        (1..=self.m()).map(|m| (m as f64).ln()).collect()
    }

    /// d'L_M.
    pub fn dot_log(&self) -> f64 {
        self.d.iter().zip(self.log_m()).map(|(d, l)| d * l).sum()
    }

    /// Dilations with d_m < 0 (1-based).
    pub fn i_minus(&self) -> Vec<usize> {
        (1..=self.m()).filter(|&m| self.d[m - 1] < 0.0).collect()
    }

    pub fn i_plus(&self) -> Vec<usize> {
        (1..=self.m()).filter(|&m| self.d[m - 1] > 0.0).collect()
    }
}

pub(crate) fn centred_log_vector(m: usize) -> Vec<f64> {
    let l: Vec<f64> = (1..=m).map(|k| (k as f64).ln()).collect();
    let mean = l.iter().sum::<f64>() / m as f64;
    l.iter().map(|x| x - mean).collect()
}

/// log S_n for the dilations 1..=M.
pub(crate) fn log_s_dilations(path: &SamplePath, filter: &Filter, m: usize) -> Result<Vec<f64>> {
    (1..=m)
        .map(|k| Ok(quadratic_variation(path, &dilate(filter, k))?.s_n.ln()))
        .collect()
}

/// Scale-free interval from the dilations a^1..a^M.
pub fn ci_unknown_scale(
    path: &SamplePath,
    filter: &Filter,
    design: &DilationDesign,
    alpha: f64,
) -> Result<ConfidenceInterval> {
    check_alpha(alpha)?;
    design.validate()?;
    let n = path.n();
    let big_m = design.m();
    let ell = filter.ell();
    if n < big_m * ell + 1 {
        return Ok(ConfidenceInterval::infeasible(
            Method::CiUnknown,
            alpha,
            format!("n = {n} below M l + 1 = {}", big_m * ell + 1),
        ));
    }
    let level = alpha / (2.0 * big_m as f64);
    let mut diag = Diagnostics::default();
    let (mut d_ls, mut d_inf, mut d_sup) = (0.0, 0.0, 0.0);
    for m in 1..=big_m {
        let fm = dilate(filter, m);
        let k = kappa(&fm)?;
        let (xl, xr, ql, qr) = x_bounds(k, n - m * ell, level)?;
        let s = quadratic_variation(path, &fm)?.s_n;
        let d = design.d[m - 1];
        let (inf_x, sup_x) = if d < 0.0 { (xl, xr) } else { (xr, xl) };
        d_ls += d * s.ln();
        d_inf += d * inf_x.ln();
        d_sup += d * sup_x.ln();
        diag.s_n.push(s);
        diag.q_left.push(ql);
        diag.q_right.push(qr);
        diag.kappa.push(k);
    }
    let denom = 2.0 * design.dot_log();
    let lo = (d_ls - d_inf) / denom;
    let hi = (d_ls - d_sup) / denom;
    let (lower, upper) = clamp_endpoints(lo, hi, 1.0, &mut diag);
    Ok(ConfidenceInterval {
        lower,
        upper,
        level: 1.0 - alpha,
        method: Method::CiUnknown,
        feasible: true,
        estimator: Some((d_ls / denom).clamp(0.0, 1.0)),
        diagnostics: diag,
    })
}

/// Limiting value of CI-known length * sqrt(n) log n.
pub fn known_length_constant(filter: &Filter, alpha: f64) -> Result<f64> {
    Ok(q_asymptotic(alpha / 2.0, kappa(filter)?))
}

/// Limiting value of CI-unknown length * sqrt(n): d'q_M(alpha/2M) / d'L_M.
pub fn unknown_length_constant(
    filter: &Filter,
    design: &DilationDesign,
    alpha: f64,
) -> Result<f64> {
    let level = alpha / (2.0 * design.m() as f64);
    let mut num = 0.0;
    for m in 1..=design.m() {
        let q = q_asymptotic(level, kappa(&dilate(filter, m))?);
        num += design.d[m - 1].abs() * q;
    }
    Ok(num / design.dot_log())
}

#[cfg(test)]
mod tests;
