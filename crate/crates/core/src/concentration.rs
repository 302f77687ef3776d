//! Tail bounds for quadratic variations of filtered Gaussian sequences and
//! their inverses.
//!
//! With Z = sqrt(n) V_n and kappa = 2 ||rho||_1,
//!     P(Z >= t)  <= phi_r(t) = exp(-t sqrt(n)/kappa) (1 + t/sqrt(n))^{n/kappa},
//!     P(Z <= -t) <= phi_l(t) = exp( t sqrt(n)/kappa) (1 - t/sqrt(n))^{n/kappa}, t < sqrt(n).
//! These are the general (a, b) bounds with a = 2 kappa / sqrt(n), b = 2 kappa.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{bisect_decreasing, ln1p_minus_x};

const INVERSE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConcentrationBound {
    pub kappa: f64,
    pub n_eff: usize,
}

impl ConcentrationBound {
    pub fn new(kappa: f64, n_eff: usize) -> Result<Self> {
        if !(kappa > 0.0) {
            return Err(Error::Domain {
                what: "kappa",
                value: kappa,
            });
        }
        if n_eff == 0 {
            return Err(Error::Domain {
                what: "n_eff",
                value: 0.0,
            });
        }
        Ok(ConcentrationBound { kappa, n_eff })
    }

    pub fn general(&self) -> GeneralBoundParams {
        let sn = (self.n_eff as f64).sqrt();
        GeneralBoundParams {
            a: 2.0 * self.kappa / sn,
            b: 2.0 * self.kappa,
        }
    }
}

/// Parameters of the general bound for Z with E[Z] = 0 and
/// <DZ, -DL^{-1}Z> <= a Z + b.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeneralBoundParams {
    pub a: f64,
    pub b: f64,
}

impl GeneralBoundParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a >= 0.0) {
            return Err(Error::Domain {
                what: "a",
                value: a,
            });
        }
        if !(b > 0.0) {
            return Err(Error::Domain {
                what: "b",
                value: b,
            });
        }
        Ok(GeneralBoundParams { a, b })
    }

    /// From the (alpha, beta) parametrisation <DZ, -DL^{-1}Z> <= alpha Z + beta
    /// used for the earlier sub-Gaussian statement, where the bounds read
    /// exp(-t^2/(2 beta)) and exp(-t^2/(2 alpha t + 2 beta)).
    pub fn from_nv_parametrisation(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(2.0 * alpha, 2.0 * beta)
    }

    /// Right end of the left-tail domain, b/a.
    pub fn left_limit(&self) -> f64 {
        if self.a == 0.0 {
            f64::INFINITY
        } else {
            self.b / self.a
        }
    }
}

pub fn phi_r(t: f64, bound: &ConcentrationBound) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    let sn = (bound.n_eff as f64).sqrt();
    // -t sqrt(n)/kappa + (n/kappa) log1p(t/sqrt(n)) = (n/kappa) (log1p(x) - x)
    let x = t / sn;
    ((bound.n_eff as f64 / bound.kappa) * ln1p_minus_x(x)).exp()
}

pub fn phi_l(t: f64, bound: &ConcentrationBound) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    let sn = (bound.n_eff as f64).sqrt();
    if t >= sn {
        return 0.0;
    }
    let x = -t / sn;
    ((bound.n_eff as f64 / bound.kappa) * ln1p_minus_x(x)).exp()
}

/// exp(-2t/a) (1 + a t / b)^{2b/a^2}; exp(-t^2/b) at a = 0.
pub fn phi_r_general(t: f64, p: &GeneralBoundParams) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    if p.a == 0.0 {
        return (-t * t / p.b).exp();
    }
    let x = p.a * t / p.b;
    (2.0 * p.b / (p.a * p.a) * ln1p_minus_x(x)).exp()
}

/// exp(2t/a) (1 - a t / b)^{2b/a^2} on [0, b/a), zero beyond.
pub fn phi_l_general(t: f64, p: &GeneralBoundParams) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    if p.a == 0.0 {
        return (-t * t / p.b).exp();
    }
    if t >= p.left_limit() {
        return 0.0;
    }
    let x = -p.a * t / p.b;
    (2.0 * p.b / (p.a * p.a) * ln1p_minus_x(x)).exp()
}

/// Right tail of the earlier Gaussian-type bound, exp(-t^2/(a t + b)).
pub fn nv_phi_r(t: f64, p: &GeneralBoundParams) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    (-t * t / (p.a * t + p.b)).exp()
}

/// Left tail of the earlier Gaussian-type bound, exp(-t^2/b).
pub fn nv_phi_l(t: f64, p: &GeneralBoundParams) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    (-t * t / p.b).exp()
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "alpha",
            value: alpha,
        })
    }
}

/// Invert a decreasing tail bound on (0, inf), seeding the bracket at `seed`.
fn invert_right<F: Fn(f64) -> f64>(phi: F, alpha: f64, seed: f64) -> f64 {
    let mut hi = seed.max(1e-3);
    while phi(hi) >= alpha {
        hi *= 2.0;
    }
    bisect_decreasing(&phi, alpha, 0.0, hi, INVERSE_TOL)
}

/// sqrt(2 kappa log(1/alpha)).
pub fn q_asymptotic(alpha: f64, kappa: f64) -> f64 {
    (2.0 * kappa * (1.0 / alpha).ln()).sqrt()
}

pub fn invert_phi_r(alpha: f64, bound: &ConcentrationBound) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(invert_right(
        |t| phi_r(t, bound),
        alpha,
        q_asymptotic(alpha, bound.kappa),
    ))
}

pub fn invert_phi_l(alpha: f64, bound: &ConcentrationBound) -> Result<f64> {
    check_alpha(alpha)?;
    let sn = (bound.n_eff as f64).sqrt();
    Ok(bisect_decreasing(
        |t| phi_l(t, bound),
        alpha,
        0.0,
        sn,
        INVERSE_TOL,
    ))
}

pub fn invert_phi_r_general(alpha: f64, p: &GeneralBoundParams) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(invert_right(
        |t| phi_r_general(t, p),
        alpha,
        (p.b * (1.0 / alpha).ln()).sqrt(),
    ))
}

pub fn invert_phi_l_general(alpha: f64, p: &GeneralBoundParams) -> Result<f64> {
    check_alpha(alpha)?;
    let hi = if p.a == 0.0 {
        (p.b * (1.0 / alpha).ln()).sqrt() * 2.0
    } else {
        p.left_limit()
    };
    Ok(bisect_decreasing(
        |t| phi_l_general(t, p),
        alpha,
        0.0,
        hi,
        INVERSE_TOL,
    ))
}

/// Positive root of t^2 = L (a t + b), L = log(1/alpha).
pub fn invert_nv_phi_r(alpha: f64, p: &GeneralBoundParams) -> Result<f64> {
    check_alpha(alpha)?;
    let l = (1.0 / alpha).ln();
    Ok(0.5 * (p.a * l + (p.a * p.a * l * l + 4.0 * p.b * l).sqrt()))
}

/// sqrt(b log(1/alpha)).
pub fn invert_nv_phi_l(alpha: f64, p: &GeneralBoundParams) -> Result<f64> {
    check_alpha(alpha)?;
    Ok((p.b * (1.0 / alpha).ln()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_values() {
        let b = ConcentrationBound::new(4.0, 100).unwrap();
        assert_eq!(phi_l(0.0, &b), 1.0);
        assert_eq!(phi_l(10.0, &b), 0.0);
        assert!((phi_r(1e-9, &b) - 1.0).abs() < 1e-12);
        assert!(phi_l(9.999_999, &b) < 1e-20);
    }

    #[test]
    fn matches_direct_formula() {
        let b = ConcentrationBound::new(5.3, 57).unwrap();
        let n = 57f64;
        for &t in &[0.1, 1.0, 3.3, 7.0] {
            let direct = (-t * n.sqrt() / 5.3).exp() * (1.0 + t / n.sqrt()).powf(n / 5.3);
            assert!((phi_r(t, &b) - direct).abs() < 1e-13);
            let direct_l = (t * n.sqrt() / 5.3).exp() * (1.0 - t / n.sqrt()).powf(n / 5.3);
            assert!((phi_l(t, &b) - direct_l).abs() < 1e-13);
        }
    }

    #[test]
    fn general_form_correspondence() {
        let b = ConcentrationBound::new(16.0 / 3.0, 998).unwrap();
        let g = b.general();
        for &t in &[0.3, 2.0, 5.5, 12.0] {
            assert!((phi_r(t, &b) - phi_r_general(t, &g)).abs() < 1e-14);
            assert!((phi_l(t, &b) - phi_l_general(t, &g)).abs() < 1e-14);
        }
    }

    #[test]
    fn small_a_limit_is_gaussian() {
        // series: -2t/a + (2b/a^2) log1p(at/b) = -t^2/b + 2 a t^3/(3 b^2) + O(a^2)
        for &a in &[1e-6, 1e-8, 0.0] {
            let p = GeneralBoundParams::new(a, 3.0).unwrap();
            for &t in &[0.5f64, 1.0, 2.5] {
                let limit = (-t * t / 3.0).exp();
                assert!((phi_r_general(t, &p) - limit).abs() < 1e-6);
                assert!((phi_l_general(t, &p) - limit).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn round_trips() {
        let b = ConcentrationBound::new(7.813554, 250).unwrap();
        for &alpha in &[1e-6, 1e-4, 0.01, 0.025, 0.1, 0.5] {
            let tr = invert_phi_r(alpha, &b).unwrap();
            assert!((phi_r(tr, &b) - alpha).abs() < 1e-10);
            let tl = invert_phi_l(alpha, &b).unwrap();
            assert!((phi_l(tl, &b) - alpha).abs() < 1e-10);
        }
        assert!(invert_phi_r(1.0, &b).is_err());
        assert!(invert_phi_l(0.0, &b).is_err());
        assert!(invert_phi_r(1.0 - 1e-9, &b).unwrap() < 1e-3);
    }

    #[test]
    fn bounds_table_cells() {
        // kappa = 4, n_eff = n reproduces the tabulated inverse bounds
        let b = ConcentrationBound::new(4.0, 1000).unwrap();
        assert!((invert_phi_l(0.10, &b).unwrap() - 4.1000).abs() < 1e-4);
        assert!((invert_phi_r(0.10, &b).unwrap() - 4.4883).abs() < 1e-4);
        let b = ConcentrationBound::new(4.0, 100).unwrap();
        assert!((phi_r(5.7249, &b) - 0.05).abs() < 1e-4);
        assert!((phi_l(4.1314, &b) - 0.05).abs() < 1e-4);
        let nv = GeneralBoundParams::from_nv_parametrisation(4.0 / 50f64.sqrt(), 4.0).unwrap();
        assert!((invert_nv_phi_r(0.01, &nv).unwrap() - 9.2102).abs() < 1e-4);
    }

    #[test]
    fn nv_inverses_closed_form() {
        let p = GeneralBoundParams::new(0.7, 5.0).unwrap();
        for &alpha in &[0.01, 0.2] {
            let t = invert_nv_phi_r(alpha, &p).unwrap();
            assert!((nv_phi_r(t, &p) - alpha).abs() < 1e-14);
            let t = invert_nv_phi_l(alpha, &p).unwrap();
            assert!((nv_phi_l(t, &p) - alpha).abs() < 1e-14);
        }
    }

    #[test]
    fn asymptotic_quantile() {
        assert!((q_asymptotic((-1f64).exp(), 2.0) - 2.0).abs() < 1e-15);
        let k = 16.0 / 3.0;
        assert!((q_asymptotic(0.025, k) - (32.0 / 3.0 * 40f64.ln()).sqrt()).abs() < 1e-14);
        let b = ConcentrationBound::new(k, 100_000_000).unwrap();
        let t = invert_phi_r(0.025, &b).unwrap();
        assert!((t / q_asymptotic(0.025, k) - 1.0).abs() < 1e-3);
    }
}
