//! Small numeric kernels shared by the modules: Hurwitz zeta, compensated
//! summation, scalar search and a few stable elementary combinations.

/// B_{2i} / (2i)! for i = 1..=12.
const BERNOULLI_OVER_FACT: [f64; 12] = [
    1.0 / 6.0 / 2.0,
    -1.0 / 30.0 / 24.0,
    1.0 / 42.0 / 720.0,
    -1.0 / 30.0 / 40320.0,
    5.0 / 66.0 / 3628800.0,
    -691.0 / 2730.0 / 479001600.0,
    7.0 / 6.0 / 87178291200.0,
    -3617.0 / 510.0 / 20922789888000.0,
    43867.0 / 798.0 / 6402373705728000.0,
    -174611.0 / 330.0 / 2432902008176640000.0,
    854513.0 / 138.0 / 1.1240007277776077e21,
    -236364091.0 / 2730.0 / 6.204484017332394e23,
];

/// Euler-Maclaurin pieces of zeta(s, a): direct head, and the tail
/// expansion with the x^{1-s}/(s-1) term split out so callers can
/// multiply through by (s - 1).
fn zeta_parts(s: f64, a: f64) -> (f64, f64, f64) {
    debug_assert!(a > 0.0);
    let shift = (s + 24.0 - a).ceil().max(0.0) as usize;
    let mut head = NeumaierSum::default();
    for k in 0..shift {
        head.add((a + k as f64).powf(-s));
    }
    let x = a + shift as f64;
    let x_pow = x.powf(-s);
    let mut corr = 0.5 * x_pow;
    let mut rising = s;
    let mut xp = x_pow / x;
    let inv_x2 = 1.0 / (x * x);
    for (i, b) in BERNOULLI_OVER_FACT.iter().enumerate() {
        let term = b * rising * xp;
        corr += term;
        if term.abs() < 1e-18 * corr.abs() {
            break;
        }
        let k = 2.0 * (i as f64 + 1.0);
        rising *= (s + k - 1.0) * (s + k);
        xp *= inv_x2;
    }
    (head.sum(), x * x_pow, corr)
}

/// Hurwitz zeta function zeta(s, a) = sum_{k>=0} (a + k)^{-s} for s > 1, a > 0.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    assert!(s > 1.0 && a > 0.0, "hurwitz_zeta needs s > 1, a > 0");
    let (head, pole, corr) = zeta_parts(s, a);
    head + corr + pole / (s - 1.0)
}

/// (s - 1) zeta(s, a); finite and smooth through s = 1 where it equals 1.
pub fn hurwitz_zeta_pole_scaled(s: f64, a: f64) -> f64 {
    assert!(s >= 1.0 && a > 0.0, "pole-scaled zeta needs s >= 1, a > 0");
    let (head, pole, corr) = zeta_parts(s, a);
    (s - 1.0) * (head + corr) + pole
}

/// Neumaier's compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn sum(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut s = NeumaierSum::default();
    for x in it {
        s.add(x);
    }
    s.sum()
}

/// log(1 + x) - x, accurate for small |x|.
pub fn ln1p_minus_x(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        // alternating series -x^2/2 + x^3/3 - ...
        let mut term = -x * x;
        let mut acc = 0.0;
        for k in 2..12 {
            acc += term / k as f64;
            term *= -x;
        }
        acc
    } else {
        x.ln_1p() - x
    }
}

/// expm1(d ln x) / d, with the d = 0 limit ln x. Requires x > 0.
pub fn expm1_ratio(x: f64, d: f64) -> f64 {
    let l = x.ln();
    if d == 0.0 {
        l
    } else {
        (d * l).exp_m1() / d
    }
}

/// Maximise a unimodal function on [lo, hi] by golden-section search.
/// Returns (argmax, max).
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, rel_tol: f64) -> (f64, f64) {
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - invphi * (b - a);
    let mut d = a + invphi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= rel_tol * (c.abs() + d.abs()).max(1e-3) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Bisection for an increasing function: returns x in [lo, hi] with
/// f(x) ~ target, to absolute tolerance `tol` in x.
pub fn bisect_increasing<F: Fn(f64) -> f64>(
    f: F,
    target: f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Bisection for a decreasing function.
pub fn bisect_decreasing<F: Fn(f64) -> f64>(f: F, target: f64, lo: f64, hi: f64, tol: f64) -> f64 {
    bisect_increasing(|x| -f(x), -target, lo, hi, tol)
}
