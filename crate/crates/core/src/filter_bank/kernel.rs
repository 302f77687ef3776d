//! Lag kernels: finite sums  V(j) = sum_i w_i |j + d_i|^{2H}  and their
//! large-lag expansion.
//!
//! For kernels whose moments of order 0..=3 vanish (filters of order p >= 2)
//! the kernel is evaluated in the reduced form
//!     Q(j) = sum_i w_i (j + d_i)^2 expm1(delta ln|j + d_i|) / delta,
//! delta = 2H - 2, which equals V(j)/delta and stays finite at H = 1. Away
//! from H = 1 the same quantity is computed as sum_i w_i |j + d_i|^{2H} / delta.
//!
//! Beyond the support radius R,
//!     V(j) = f(H) j^{2H} sum_{k >= 2p} c_k(H) M_k j^{-k},   f(H) = 2H(2H-1),
//! with M_k = sum_i w_i d_i^k and c_k the binomial coefficient binom(2H, k)
//! stripped of f (and of delta in reduced form). Tails over j > J are sums of
//! Hurwitz zeta values.

use std::collections::BTreeMap;

use crate::numerics::{expm1_ratio, hurwitz_zeta, hurwitz_zeta_pole_scaled, NeumaierSum};

const K_MAX: usize = 64;

/// Below this |delta| the expm1 form is used; above it x^{2H}/delta cancels
/// less at large lags.
const REDUCED_SWITCH: f64 = 0.1;

#[derive(Debug, Clone)]
pub(crate) struct LagKernel {
    terms: Vec<(i64, f64)>,
    order: usize,
    reduced: bool,
    radius: i64,
    weight_l1: f64,
    moments: Vec<f64>,
}

impl LagKernel {
    /// `order` is the filter order p; moments below 2p are treated as zero.
    pub fn new<I: IntoIterator<Item = (i64, f64)>>(terms: I, order: usize) -> Self {
        let mut merged: BTreeMap<i64, f64> = BTreeMap::new();
        for (d, w) in terms {
            *merged.entry(d).or_insert(0.0) += w;
        }
        let terms: Vec<(i64, f64)> = merged.into_iter().filter(|&(_, w)| w != 0.0).collect();
        let radius = terms.iter().map(|&(d, _)| d.abs()).max().unwrap_or(0);
        let weight_l1 = terms.iter().map(|&(_, w)| w.abs()).sum();
        let mut moments = vec![0.0; K_MAX + 1];
        for (k, m) in moments.iter_mut().enumerate().skip(2 * order) {
            let mut acc = NeumaierSum::default();
            for &(d, w) in &terms {
                acc.add(w * (d as f64).powi(k as i32));
            }
            *m = acc.sum();
        }
        LagKernel {
            terms,
            order,
            reduced: order >= 2,
            radius,
            weight_l1,
            moments,
        }
    }

    pub fn radius(&self) -> usize {
        self.radius as usize
    }

    pub fn is_reduced(&self) -> bool {
        self.reduced
    }

    /// g(x) for x = 0..=upto, where V(j) = sum w g(|j + d|).
    pub fn g_table(&self, h: f64, upto: usize) -> Vec<f64> {
        let mut t = Vec::with_capacity(upto + 1);
        t.push(0.0);
        t.extend((1..=upto as u64).map(|x| self.g(h, x)));
        t
    }

    pub fn value_from(&self, table: &[f64], j: i64) -> f64 {
        let mut acc = NeumaierSum::default();
        for &(d, w) in &self.terms {
            acc.add(w * table[(j + d).unsigned_abs() as usize]);
        }
        acc.sum()
    }

    pub fn g(&self, h: f64, x: u64) -> f64 {
        if x == 0 {
            return 0.0;
        }
        let xf = x as f64;
        let delta = 2.0 * h - 2.0;
        if !self.reduced {
            xf.powf(2.0 * h)
        } else if delta.abs() > REDUCED_SWITCH {
            // differs from the branch below by x^2/delta, which the kernel annihilates
            xf.powf(2.0 * h) / delta
        } else {
            xf * xf * expm1_ratio(xf, delta)
        }
    }

    pub fn value(&self, h: f64, j: i64) -> f64 {
        let mut acc = NeumaierSum::default();
        for &(d, w) in &self.terms {
            acc.add(w * self.g(h, (j + d).unsigned_abs()));
        }
        acc.sum()
    }

    /// Expansion coefficients on one side (`side` = +1 for j -> +inf,
    /// -1 for j -> -inf) truncated at order `k_max`.
    pub fn series(&self, h: f64, side: i64, k_max: usize) -> Series {
        let k_max = k_max.min(K_MAX);
        let k0 = 2 * self.order;
        let start = if self.reduced { 3 } else { 2 };
        let mut coef = vec![0.0; k_max + 1];
        // shape_k = prod_{i=start}^{k-1} (2H - i) / k!
        let mut shape = 1.0;
        for k in 1..=k_max {
            if k > start {
                shape *= 2.0 * h - (k - 1) as f64;
            }
            shape /= k as f64;
            if k >= k0 {
                let sign = if side < 0 && k % 2 == 1 { -1.0 } else { 1.0 };
                coef[k] = shape * sign * self.moments[k];
            }
        }
        Series {
            h,
            k0,
            coef,
            prefactor: 2.0 * h * (2.0 * h - 1.0),
            plain: !self.reduced,
            radius: self.radius as f64,
            weight_l1: self.weight_l1,
        }
    }
}

/// Large-lag expansion of a kernel at fixed H on one side.
#[derive(Debug, Clone)]
pub(crate) struct Series {
    h: f64,
    k0: usize,
    coef: Vec<f64>,
    prefactor: f64,
    plain: bool,
    radius: f64,
    weight_l1: f64,
}

impl Series {
    fn k_max(&self) -> usize {
        self.coef.len() - 1
    }

    /// Sufficient order so that the geometric remainder at lags > j is
    /// below 1e-17 relative; capped by the kernel's moment table.
    pub fn order_for(radius: usize, j: usize) -> usize {
        let r = radius as f64 / j as f64;
        if r <= 0.0 {
            return 8;
        }
        ((-17.0 * std::f64::consts::LN_10) / r.ln())
            .ceil()
            .clamp(8.0, K_MAX as f64) as usize
    }

    /// Sign of f(H) c_{2p} M_{2p}, the leading large-lag term.
    #[cfg(test)]
    pub fn leading_term_sign(&self) -> f64 {
        (self.prefactor * self.coef[self.k0]).signum()
    }

    /// True when the leading term dominates every other term for all lags
    /// >= j, so the kernel keeps one sign there.
    pub fn dominates_from(&self, j: usize) -> bool {
        let jf = j as f64;
        if jf <= self.radius {
            return false;
        }
        let lead = self.coef[self.k0].abs();
        let mut rest = 0.0;
        for k in self.k0 + 1..=self.k_max() {
            rest += self.coef[k].abs() * jf.powi(self.k0 as i32 - k as i32);
        }
        let q = self.radius / jf;
        let kk = self.k_max() as i32 + 1;
        rest += self.weight_l1 * jf.powi(self.k0 as i32) * q.powi(kk) / (kk as f64 * (1.0 - q));
        lead > rest
    }

    /// sum_{j > big_j} V(side * j), optionally as the limit H -> 1/2 from
    /// below for plain kernels.
    pub fn tail_sum(&self, big_j: usize, left_limit_at_half: bool) -> f64 {
        if self.prefactor == 0.0 && !(left_limit_at_half && self.plain) {
            return 0.0;
        }
        let a = big_j as f64 + 1.0;
        let two_h = 2.0 * self.h;
        let mut acc = NeumaierSum::default();
        for k in self.k0..=self.k_max() {
            let c = self.coef[k];
            if c == 0.0 {
                continue;
            }
            if self.plain && k == 2 {
                // f c_2 zeta(2 - 2H) = -H M_2 (1 - 2H) zeta(2 - 2H)
                acc.add(-self.h * 2.0 * c * hurwitz_zeta_pole_scaled(2.0 - two_h, a));
            } else {
                acc.add(self.prefactor * c * hurwitz_zeta(k as f64 - two_h, a));
            }
        }
        acc.sum()
    }

    /// Upper bound on |sum_{j > big_j} V(side * j)| contributed by orders
    /// above the truncation.
    pub fn tail_remainder(&self, big_j: usize) -> f64 {
        let a = big_j as f64 + 1.0;
        let r = self.radius / a;
        let k = self.k_max() as f64;
        self.prefactor.abs()
            * self.weight_l1
            * a.powf(2.0 * self.h)
            * (1.0 + a / (k - 2.0))
            * r.powf(k + 1.0)
            / ((k + 1.0) * (1.0 - r))
    }

    /// sum_{j > big_j} V(side * j)^2 via the squared expansion.
    pub fn tail_sum_sq(&self, big_j: usize) -> f64 {
        if self.prefactor == 0.0 {
            return 0.0;
        }
        let a = big_j as f64 + 1.0;
        let four_h = 4.0 * self.h;
        let kmax = self.k_max();
        let mut acc = NeumaierSum::default();
        for s in 2 * self.k0..=kmax + self.k0 {
            let mut cs = 0.0;
            for k in self.k0..=(s - self.k0) {
                let kp = s - k;
                if k <= kmax && kp <= kmax {
                    cs += self.coef[k] * self.coef[kp];
                }
            }
            if cs != 0.0 {
                acc.add(cs * hurwitz_zeta(s as f64 - four_h, a));
            }
        }
        self.prefactor * self.prefactor * acc.sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn i2_kernel() -> LagKernel {
        LagKernel::new([(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)], 2)
    }

    #[test]
    fn reduced_value_matches_plain_over_delta() {
        let k = i2_kernel();
        for &h in &[0.1, 0.37, 0.8] {
            for j in 0..6i64 {
                let plain: f64 = [(-2i64, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)]
                    .iter()
                    .map(|&(d, w)| {
                        let x = (j + d).abs() as f64;
                        if x == 0.0 {
                            0.0
                        } else {
                            w * x.powf(2.0 * h)
                        }
                    })
                    .sum();
                let reduced = k.value(h, j);
                assert!(
                    (reduced * (2.0 * h - 2.0) - plain).abs() < 1e-12,
                    "h={h} j={j}"
                );
            }
        }
    }

    #[test]
    fn tail_difference_matches_direct_sum() {
        // The reduced form cancels badly at large lags, so the oracle sums the
        // plain kernel over a window and divides by delta.
        let k = i2_kernel();
        let terms = [(-2i64, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)];
        for &h in &[0.2, 0.6, 0.95] {
            let delta = 2.0 * h - 2.0;
            let (j1, j2) = (12usize, 300usize);
            let t1 = k
                .series(h, 1, Series::order_for(2, j1 + 1))
                .tail_sum(j1, false);
            let t2 = k
                .series(h, 1, Series::order_for(2, j2 + 1))
                .tail_sum(j2, false);
            let mut direct = NeumaierSum::default();
            for j in (j1 + 1)..=j2 {
                let mut v = NeumaierSum::default();
                for &(d, w) in &terms {
                    v.add(w * ((j as i64 + d) as f64).powf(2.0 * h));
                }
                direct.add(v.sum() / delta);
            }
            let d = direct.sum();
            assert!(
                ((t1 - t2) - d).abs() < 1e-7 * d.abs(),
                "h={h}: {} vs {d}",
                t1 - t2
            );
        }
    }

    #[test]
    fn sides_of_an_asymmetric_kernel() {
        // cross kernel of {-1, 1} at dilations 1 and 2: odd moments survive
        let k = LagKernel::new([(0, 1.0), (-2, -1.0), (1, -1.0), (-1, 1.0)], 1);
        let h = 0.3;
        for side in [1i64, -1] {
            let s = k.series(h, side, 40);
            let j = 40i64;
            let direct = k.value(h, side * j);
            let mut approx = 0.0;
            for kk in 2..=40 {
                approx += s.prefactor * s.coef[kk] * (j as f64).powf(2.0 * h - kk as f64);
            }
            assert!(
                (direct - approx).abs() < 1e-12 * direct.abs().max(1e-300),
                "side {side}"
            );
        }
    }
}
