//! Asymptotic intervals from the central limit theorems for the plug-in and
//! log-regression estimators.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use super::{
    centred_log_vector, check_alpha, estimator_std, known_length_constant, log_s_dilations,
    unknown_length_constant, ConfidenceInterval, Diagnostics, DilationDesign, Method,
};
use crate::error::{Error, Result};
use crate::fbm_sim::SamplePath;
use crate::filter_bank::{cross_l2_norm_sq, rho_l2_norm_sq, Filter, DEFAULT_REL_TOL};

/// Phi^{-1}(p).
pub fn normal_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(p)
}

/// sigma_std(H)^2 = ||rho_H||_2^2 / 2.
pub fn sigma_std(filter: &Filter, h: f64) -> Result<f64> {
    Ok((0.5 * rho_l2_norm_sq(filter, h, DEFAULT_REL_TOL)?).sqrt())
}

/// sigma_gen(H, M)^2 = A'GA / (2 |A|^4), G_{m1 m2} = ||rho^{a^m1, a^m2}||_2^2.
pub fn sigma_gen(filter: &Filter, h: f64, big_m: usize) -> Result<f64> {
    let a = centred_log_vector(big_m);
    let mut quad = 0.0;
    for m1 in 1..=big_m {
        for m2 in m1..=big_m {
            let g = cross_l2_norm_sq(filter, m1, m2, h)?;
            let w = if m1 == m2 { 1.0 } else { 2.0 };
            quad += w * a[m1 - 1] * a[m2 - 1] * g;
        }
    }
    let norm2: f64 = a.iter().map(|x| x * x).sum();
    Ok((quad / (2.0 * norm2 * norm2)).sqrt())
}

/// A'L_S / (2 |A|^2), the log-regression estimator over dilations 1..=M.
pub fn estimator_gen(path: &SamplePath, filter: &Filter, big_m: usize) -> Result<f64> {
    if big_m < 2 {
        return Err(Error::Design(format!("M = {big_m}, need at least 2")));
    }
    let needed = big_m * filter.ell() + 1;
    if path.n() < needed {
        return Err(Error::InsufficientData {
            needed,
            got: path.n(),
        });
    }
    let a = centred_log_vector(big_m);
    let ls = log_s_dilations(path, filter, big_m)?;
    let num: f64 = a.iter().zip(&ls).map(|(x, y)| x * y).sum();
    let norm2: f64 = a.iter().map(|x| x * x).sum();
    Ok(num / (2.0 * norm2))
}

fn clt_interval(
    method: Method,
    estimate: f64,
    sigma: f64,
    v_n: f64,
    alpha: f64,
    s_n: Vec<f64>,
) -> ConfidenceInterval {
    let half = normal_quantile(1.0 - alpha / 2.0) * sigma / v_n;
    let (lo, hi) = (estimate - half, estimate + half);
    ConfidenceInterval {
        lower: lo.clamp(0.0, 1.0),
        upper: hi.clamp(0.0, 1.0),
        level: 1.0 - alpha,
        method,
        feasible: true,
        estimator: Some(estimate),
        diagnostics: Diagnostics {
            s_n,
            clamped_low: lo <= 0.0,
            clamped_high: hi >= 1.0,
            sigma: Some(sigma),
            ..Default::default()
        },
    }
}

pub fn ci_clt_known(path: &SamplePath, filter: &Filter, alpha: f64) -> Result<ConfidenceInterval> {
    check_alpha(alpha)?;
    let h = estimator_std(path, filter)?;
    let sigma = sigma_std(filter, h)?;
    let n = path.n() as f64;
    let s = crate::statistics::quadratic_variation(path, filter)?.s_n;
    Ok(clt_interval(
        Method::CltKnown,
        h,
        sigma,
        n.sqrt() * n.ln(),
        alpha,
        vec![s],
    ))
}

pub fn ci_clt_unknown(
    path: &SamplePath,
    filter: &Filter,
    big_m: usize,
    alpha: f64,
) -> Result<ConfidenceInterval> {
    check_alpha(alpha)?;
    let h = estimator_gen(path, filter, big_m)?;
    let sigma = sigma_gen(filter, h.clamp(0.0, 1.0), big_m)?;
    let s = log_s_dilations(path, filter, big_m)?
        .into_iter()
        .map(f64::exp)
        .collect();
    Ok(clt_interval(
        Method::CltUnknown,
        h,
        sigma,
        (path.n() as f64).sqrt(),
        alpha,
        s,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LengthRatioRow {
    pub h: f64,
    /// Limiting concentration-interval length times the rate.
    pub ci_constant: f64,
    /// Limiting CLT length 2 z sigma times the same rate.
    pub clt_constant: f64,
    pub ratio: f64,
}

/// Ratio of asymptotic interval lengths, concentration over CLT, on an H
/// grid. `big_m = None` is the known-scale case; otherwise d = A.
pub fn length_ratio_profile(
    filter: &Filter,
    big_m: Option<usize>,
    alpha: f64,
    h_grid: &[f64],
) -> Result<Vec<LengthRatioRow>> {
    check_alpha(alpha)?;
    let z = normal_quantile(1.0 - alpha / 2.0);
    let ci_constant = match big_m {
        None => known_length_constant(filter, alpha)?,
        Some(m) => unknown_length_constant(filter, &DilationDesign::centred_log(m)?, alpha)?,
    };
    h_grid
        .iter()
        .map(|&h| {
            if !(h > 0.0 && h < 1.0) {
                return Err(Error::HurstOutOfRange(h));
            }
            let sigma = match big_m {
                None => sigma_std(filter, h)?,
                Some(m) => sigma_gen(filter, h, m)?,
            };
            let clt_constant = 2.0 * z * sigma;
            Ok(LengthRatioRow {
                h,
                ci_constant,
                clt_constant,
                ratio: ci_constant / clt_constant,
            })
        })
        .collect()
}
