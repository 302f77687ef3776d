use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use rayon::prelude::*;
use serde::Serialize;

use super::{rho_l1_exact_left_limit, rho_l1_norm_left, tau_a, DilatedIncrement, Filter};
use crate::error::{Error, Result};
use crate::numerics::golden_section_max;

const GRID_POINTS: usize = 1000;
const GOLDEN_REL_TOL: f64 = 1e-8;

/// Where sup_H ||rho_H||_1 is attained.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SupLocation {
    pub h: f64,
    pub value: f64,
}

fn l1_for_sup(filter: &Filter, closed: bool, h: f64) -> f64 {
    if closed {
        rho_l1_exact_left_limit(filter, h).expect("dilated increment filter")
    } else {
        rho_l1_norm_left(filter, h)
    }
}

/// sup over H in [0, 1/2] (p = 1, limit from below at 1/2) or [0, 1] (p >= 2).
pub fn sup_l1_norm(filter: &Filter) -> Result<SupLocation> {
    if filter.order() >= 2 {
        let tau = tau_a(filter);
        if tau <= 0.0 {
            return Err(Error::AssumptionViolated(tau));
        }
    }
    let closed = DilatedIncrement::from_filter(filter).is_some();
    let h_max = filter.h_domain_max();
    let step = h_max / GRID_POINTS as f64;
    let values: Vec<f64> = (0..=GRID_POINTS)
        .into_par_iter()
        .map(|i| {
            l1_for_sup(
                filter,
                closed,
                if i == GRID_POINTS {
                    h_max
                } else {
                    i as f64 * step
                },
            )
        })
        .collect();
    let (best, &best_val) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty grid");
    let lo = best.saturating_sub(1) as f64 * step;
    let hi = ((best + 1).min(GRID_POINTS) as f64 * step).min(h_max);
    let (h_ref, v_ref) =
        golden_section_max(|h| l1_for_sup(filter, closed, h), lo, hi, GOLDEN_REL_TOL);
    let h_best = if best == GRID_POINTS {
        h_max
    } else {
        best as f64 * step
    };
    Ok(if v_ref > best_val {
        SupLocation {
            h: h_ref,
            value: v_ref,
        }
    } else {
        SupLocation {
            h: h_best,
            value: best_val,
        }
    })
}

/// kappa^a = 2 sup_H ||rho_H^a||_1, without memoisation.
pub fn kappa_uncached(filter: &Filter) -> Result<f64> {
    Ok(2.0 * sup_l1_norm(filter)?.value)
}

fn cache() -> &'static RwLock<HashMap<Vec<u64>, f64>> {
    static CACHE: OnceLock<RwLock<HashMap<Vec<u64>, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// kappa^a, memoised on the coefficient bits.
pub fn kappa(filter: &Filter) -> Result<f64> {
    let key: Vec<u64> = filter.coeffs().iter().map(|c| c.to_bits()).collect();
    if let Some(&v) = cache().read().expect("kappa cache poisoned").get(&key) {
        return Ok(v);
    }
    let v = kappa_uncached(filter)?;
    cache()
        .write()
        .expect("kappa cache poisoned")
        .insert(key, v);
    Ok(v)
}
