//! Second-difference interval with known upper bound H* on H, built on the
//! earlier sub-Gaussian concentration constants.
//!
//! The path holds n + 2 observations B(i/n), i = 0..=n+1, and
//! S_n = (1/n) sum_{i=1}^n (B((i+1)/n) - 2B(i/n) + B((i-1)/n))^2.

use super::{check_alpha, ConfidenceInterval, Diagnostics, Method};
use crate::error::{Error, Result};
use crate::fbm_sim::SamplePath;
use crate::filter_bank::make_increment_filter;
use crate::numerics::bisect_increasing;
use crate::statistics::quadratic_variation;

const TOL: f64 = 1e-12;

/// q_n(alpha) = (b + sqrt(b^2 + 852 log(2/alpha))) / 2, b = 71 log(2/alpha) / sqrt(n).
pub fn bnp_q_n(alpha: f64, n: usize) -> f64 {
    let l = (2.0 / alpha).ln();
    let b = 71.0 * l / (n as f64).sqrt();
    0.5 * (b + (b * b + 852.0 * l).sqrt())
}

fn feasible(alpha: f64, n: usize, h_star: f64) -> bool {
    bnp_q_n(alpha, n) < (4.0 - 4f64.powf(h_star)) * (n as f64).sqrt()
}

/// Smallest n with q_n(alpha) < (4 - 4^{H*}) sqrt(n).
pub fn bnp_min_feasible_n(alpha: f64, h_star: f64) -> Result<usize> {
    check_alpha(alpha)?;
    if !(h_star > 0.0 && h_star < 1.0) {
        return Err(Error::HurstOutOfRange(h_star));
    }
    // q_n decreases and the right side increases in n
    let mut hi = 1usize;
    while !feasible(alpha, hi, h_star) {
        hi *= 2;
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if feasible(alpha, mid, h_star) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi.max(1))
}

/// log(max(1, 4 - q_n/sqrt(n))) / log 4: largest admissible H*.
pub fn bnp_h_star_max(alpha: f64, n: usize) -> f64 {
    let v = 4.0 - bnp_q_n(alpha, n) / (n as f64).sqrt();
    v.max(1.0).ln() / 4f64.ln()
}

/// g_n(x) = x - log(4 - 4^x) / (2 log n).
pub fn gn_bnp(x: f64, n: usize) -> f64 {
    x - (4.0 - 4f64.powf(x)).ln() / (2.0 * (n as f64).ln())
}

/// Inverse of the increasing map above on [0, 1), clamped.
pub fn gn_bnp_inverse(y: f64, n: usize) -> f64 {
    if y <= gn_bnp(0.0, n) {
        return 0.0;
    }
    let top = 1.0 - TOL;
    if y >= gn_bnp(top, n) {
        return 1.0;
    }
    bisect_increasing(|x| gn_bnp(x, n), y, 0.0, top, TOL)
}

/// S_n of the baseline from n + 2 observations.
pub fn bnp_statistic(path: &SamplePath) -> Result<f64> {
    if path.n() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: path.n(),
        });
    }
    Ok(quadratic_variation(path, &make_increment_filter(2)?)?.s_n)
}

pub fn ci_bnp(path: &SamplePath, alpha: f64, h_star: f64) -> Result<ConfidenceInterval> {
    check_alpha(alpha)?;
    if !(h_star > 0.0 && h_star < 1.0) {
        return Err(Error::HurstOutOfRange(h_star));
    }
    let s = bnp_statistic(path)?;
    let n = path.n() - 2;
    let q = bnp_q_n(alpha, n);
    let scale = (4.0 - 4f64.powf(h_star)) * (n as f64).sqrt();
    if q >= scale {
        let mut ci = ConfidenceInterval::infeasible(
            Method::Bnp,
            alpha,
            format!("q_n = {q:.4} >= (4 - 4^H*) sqrt(n) = {scale:.4}"),
        );
        ci.diagnostics.s_n = vec![s];
        ci.diagnostics.q_left = vec![q];
        ci.diagnostics.q_right = vec![q];
        return Ok(ci);
    }
    let two_log_n = 2.0 * (n as f64).ln();
    let centre = -s.ln() / two_log_n;
    let lo = gn_bnp_inverse(centre + (1.0 - q / scale).ln() / two_log_n, n);
    let hi = gn_bnp_inverse(centre + (1.0 + q / scale).ln() / two_log_n, n);
    let diagnostics = Diagnostics {
        s_n: vec![s],
        q_left: vec![q],
        q_right: vec![q],
        clamped_low: lo <= 0.0,
        clamped_high: hi >= 1.0,
        ..Default::default()
    };
    Ok(ConfidenceInterval {
        lower: lo,
        upper: hi,
        level: 1.0 - alpha,
        method: Method::Bnp,
        feasible: true,
        estimator: Some(gn_bnp_inverse(centre, n)),
        diagnostics,
    })
}
