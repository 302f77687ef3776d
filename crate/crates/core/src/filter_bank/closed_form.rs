//! Finite closed form of ||rho_H||_1 for dilated increment filters (i_p)^m.
//!
//! Beyond lag ell the correlations of these filters share the sign of
//! (-1)^{p+1}(2H - 1), so the infinite tail telescopes into the partial
//! sums S_k = sum_{i <= k} i^{2H}.

use super::{dilate, make_increment_filter, Filter};
use crate::error::{Error, Result};
use crate::numerics::{expm1_ratio, NeumaierSum};

/// Identifies a filter as +-(i_p)^m.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DilatedIncrement {
    pub p: usize,
    pub m: usize,
}

impl DilatedIncrement {
    pub fn from_filter(filter: &Filter) -> Option<Self> {
        let p = filter.order();
        if p == 0 || !filter.ell().is_multiple_of(p) {
            return None;
        }
        let m = filter.ell() / p;
        let reference = dilate(&make_increment_filter(p).ok()?, m);
        let same = |s: f64| {
            reference
                .coeffs()
                .iter()
                .zip(filter.coeffs())
                .all(|(&x, &y)| (s * x - y).abs() <= 1e-12 * x.abs().max(1.0))
        };
        (same(1.0) || same(-1.0)).then_some(DilatedIncrement { p, m })
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn evaluate(filter: &Filter, h: f64, tail_sign: f64) -> f64 {
    let alpha = filter.alpha();
    let ell = filter.ell() as i64;
    let reduced = filter.order() >= 2;
    let delta = 2.0 * h - 2.0;
    // g(x) = x^{2H}, or x^2 expm1(delta ln x)/delta in reduced form
    let g = |x: i64| -> f64 {
        if x == 0 {
            return 0.0;
        }
        let xf = x.abs() as f64;
        if reduced {
            xf * xf * expm1_ratio(xf, delta)
        } else {
            xf.powf(2.0 * h)
        }
    };
    let mut den = NeumaierSum::default();
    for j in 1..=ell {
        den.add(alpha.get(j) * g(j));
    }
    // positive denominator: -sum alpha_j j^{2H}, or its delta-reduced counterpart
    let den = if reduced { den.sum() } else { -den.sum() };

    let mut first = NeumaierSum::default();
    for k in 1..ell {
        let mut inner = NeumaierSum::default();
        for j in -ell..=ell {
            inner.add(alpha.get(j) * g(j + k));
        }
        first.add(inner.sum().abs());
    }

    let mut prefix = vec![0.0; (2 * ell) as usize + 1];
    let mut acc = NeumaierSum::default();
    for (i, slot) in prefix.iter_mut().enumerate() {
        acc.add(g(i as i64));
        *slot = acc.sum();
    }
    let mut t = NeumaierSum::default();
    for k in (-ell + 1)..=ell {
        t.add(alpha.get(k) * prefix[(ell + k - 1) as usize]);
    }
    let parity = if filter.order() % 2 == 1 { 1.0 } else { -1.0 };
    let third = if reduced {
        -parity * tail_sign * t.sum() / den
    } else {
        parity * tail_sign * t.sum() / den
    };
    1.0 + first.sum() / den + third
}

/// ||rho_H^{(i_p)^m}||_1 from the finite closed form; exact at H = 1/2 and H = 1.
pub fn rho_l1_exact(filter: &Filter, h: f64) -> Result<f64> {
    if DilatedIncrement::from_filter(filter).is_none() {
        return Err(Error::UnsupportedFilter(filter.name().to_string()));
    }
    if !(0.0..=1.0).contains(&h) {
        return Err(Error::HurstOutOfRange(h));
    }
    if filter.order() == 1 && h > 0.5 {
        return Err(Error::NonSummable(h));
    }
    Ok(evaluate(filter, h, sign(2.0 * h - 1.0)))
}

/// Same, but at H = 1/2 returns the limit from below (2m for (i1)^m).
pub fn rho_l1_exact_left_limit(filter: &Filter, h: f64) -> Result<f64> {
    if h == 0.5 {
        if DilatedIncrement::from_filter(filter).is_none() {
            return Err(Error::UnsupportedFilter(filter.name().to_string()));
        }
        return Ok(evaluate(filter, h, -1.0));
    }
    rho_l1_exact(filter, h)
}
