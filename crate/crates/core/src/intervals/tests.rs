use super::*;
use crate::fbm_sim::{FgnGenerator, SimConfig};
use crate::filter_bank::{builtin_filter, cross_l2_norm_sq, parse_filter_spec};

fn f(name: &str) -> Filter {
    parse_filter_spec(name).unwrap()
}

fn path(h: f64, n: usize, seed: u64) -> SamplePath {
    FgnGenerator::new(SimConfig::new(h, 1.0, n, seed))
        .unwrap()
        .replication(0)
}

#[test]
fn gn_for_second_differences() {
    let i2 = f("i2");
    for &x in &[0.1, 0.4, 0.77] {
        let want = 2.0 * x * 100f64.ln() - (4.0 - 4f64.powf(x)).ln();
        assert!((gn(x, &i2, 100).unwrap() - want).abs() < 1e-12);
    }
    assert!((gn(0.5, &i2, 100).unwrap() - (100f64.ln() - 2f64.ln())).abs() < 1e-12);
    assert_eq!(gn(1.0, &i2, 100).unwrap(), f64::INFINITY);
}

#[test]
fn gn_monotone_above_threshold() {
    for name in ["i2", "d4", "c6", "i3", "d8", "c12", "d4^3"] {
        let a = f(name);
        let n = min_n_invertible(&a).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for k in 1..200 {
            let v = gn(k as f64 / 200.0, &a, n).unwrap();
            assert!(v.is_finite() && v > prev, "{name} at {k}");
            prev = v;
        }
    }
}

#[test]
fn minimal_sizes() {
    assert_eq!(min_n_invertible(&f("i2")).unwrap(), 3);
    assert_eq!(min_n_invertible(&f("d4")).unwrap(), 4);
    assert_eq!(min_n_invertible(&f("c12")).unwrap(), 12);
    // l m + 1 for the dilation, since exp(sup) stays below it
    assert_eq!(min_n_invertible(&f("d4^2")).unwrap(), 7);
    let (_, sup) = gn_slope_sup(&f("d4^2")).unwrap();
    assert!(sup.exp() < 7.0);
}

#[test]
fn slope_sup_matches_brute_force() {
    let a = f("c6");
    let (_, sup) = gn_slope_sup(&a).unwrap();
    let alpha: Vec<(i64, f64)> = a.alpha().iter().filter(|&(j, _)| j != 0).collect();
    let mut brute = f64::NEG_INFINITY;
    for k in 0..20_000 {
        let x = k as f64 / 20_000.0;
        let num: f64 = alpha
            .iter()
            .map(|&(j, w)| w * (j.abs() as f64).ln() * (j.abs() as f64).powf(2.0 * x))
            .sum();
        let den: f64 = alpha
            .iter()
            .map(|&(j, w)| w * (j.abs() as f64).powf(2.0 * x))
            .sum();
        brute = brute.max(num / den);
    }
    assert!(
        sup >= brute - 1e-9 && sup - brute < 1e-6,
        "{sup} vs {brute}"
    );
}

#[test]
fn gn_inverse_round_trip_and_boundaries() {
    for name in ["i2", "d4", "i4"] {
        let a = f(name);
        let n = 100;
        for k in 1..10 {
            let x = k as f64 / 10.0;
            let y = gn(x, &a, n).unwrap();
            match gn_inverse(y, &a, n) {
                GnInverse::Interior(v) => assert!((v - x).abs() < 1e-10, "{name} {x}: {v}"),
                other => panic!("{other:?}"),
            }
        }
        let g0 = gn(0.0, &a, n).unwrap();
        assert_eq!(gn_inverse(g0 - 1.0, &a, n), GnInverse::BelowImage);
        assert!(gn_inverse(g0 + 1e-9, &a, n).value() < 1e-6);
        assert_eq!(gn_inverse(1e6, &a, n), GnInverse::AboveImage);
    }
    assert!((gn_inverse(100f64.ln() - 2f64.ln(), &f("i2"), 100).value() - 0.5).abs() < 1e-10);
}

#[test]
fn estimator_std_recovers_h_from_exact_statistic() {
    // a path whose filtered values are constant in magnitude: +-v
    let a = f("i1");
    let n = 64;
    let h = 0.3;
    let v = (pi(&a, h, 0) / (n as f64).powf(2.0 * h)).sqrt();
    let values: Vec<f64> = (0..n).map(|i| i as f64 * v).collect();
    let est = estimator_std(&SamplePath::from_values(values), &a).unwrap();
    assert!((est - h).abs() < 1e-10);
}

#[test]
fn known_interval_brackets_estimator() {
    for (h, seed) in [(0.2, 1), (0.5, 2), (0.8, 3)] {
        for name in ["i2", "d4"] {
            let p = path(h, 200, seed);
            let ci = ci_known_scale(&p, &f(name), 0.05).unwrap();
            let est = estimator_std(&p, &f(name)).unwrap();
            assert!(ci.feasible);
            assert!(
                ci.lower <= est && est <= ci.upper,
                "{name} {h}: {ci:?} {est}"
            );
            assert!(0.0 <= ci.lower && ci.upper <= 1.0);
            assert_eq!(ci.estimator, Some(est));
        }
    }
}

#[test]
fn known_interval_infeasible_below_threshold() {
    let p = SamplePath::from_values(vec![0.0, 0.1]);
    let ci = ci_known_scale(&p, &f("i2"), 0.05).unwrap();
    assert!(!ci.feasible);
}

#[test]
fn nesting_in_alpha() {
    let p = path(0.6, 300, 9);
    let design = DilationDesign::centred_log(3).unwrap();
    for name in ["i2", "d4"] {
        let a = f(name);
        let wide = ci_known_scale(&p, &a, 0.01).unwrap();
        let narrow = ci_known_scale(&p, &a, 0.2).unwrap();
        assert!(wide.lower <= narrow.lower && narrow.upper <= wide.upper);
        let wide = ci_unknown_scale(&p, &a, &design, 0.01).unwrap();
        let narrow = ci_unknown_scale(&p, &a, &design, 0.2).unwrap();
        assert!(wide.lower <= narrow.lower && narrow.upper <= wide.upper);
    }
}

#[test]
fn design_validation() {
    assert!(DilationDesign::new(vec![-1.0, 1.0]).is_ok());
    assert!(matches!(
        DilationDesign::new(vec![1.0, -1.0]),
        Err(Error::Design(_))
    ));
    assert!(matches!(
        DilationDesign::new(vec![-1.0, 0.5]),
        Err(Error::Design(_))
    ));
    assert!(matches!(
        DilationDesign::new(vec![-1.0, 0.0, 1.0]),
        Err(Error::Design(_))
    ));
    assert!(matches!(
        DilationDesign::new(vec![1.0]),
        Err(Error::Design(_))
    ));
    let a = DilationDesign::centred_log(5).unwrap();
    assert_eq!(a.i_minus(), vec![1, 2]);
    assert_eq!(a.i_plus(), vec![3, 4, 5]);
}

#[test]
fn unknown_m2_matches_explicit_formula() {
    let p = path(0.35, 400, 4);
    let a = f("i2");
    let design = DilationDesign::new(vec![-1.0, 1.0]).unwrap();
    let alpha = 0.05;
    let ci = ci_unknown_scale(&p, &a, &design, alpha).unwrap();
    let n = p.n();
    let lvl = alpha / 4.0;
    let s1 = quadratic_variation(&p, &a).unwrap().s_n;
    let a2 = dilate(&a, 2);
    let s2 = quadratic_variation(&p, &a2).unwrap().s_n;
    let b1 = ConcentrationBound::new(kappa(&a).unwrap(), n - 2).unwrap();
    let b2 = ConcentrationBound::new(kappa(&a2).unwrap(), n - 4).unwrap();
    let xl1 = 1.0 - invert_phi_l(lvl, &b1).unwrap() / ((n - 2) as f64).sqrt();
    let xr1 = 1.0 + invert_phi_r(lvl, &b1).unwrap() / ((n - 2) as f64).sqrt();
    let xl2 = 1.0 - invert_phi_l(lvl, &b2).unwrap() / ((n - 4) as f64).sqrt();
    let xr2 = 1.0 + invert_phi_r(lvl, &b2).unwrap() / ((n - 4) as f64).sqrt();
    let l2 = 2.0 * 2f64.ln();
    let lo = ((s2 / s1).ln() - (xr2 / xl1).ln()) / l2;
    let hi = ((s2 / s1).ln() - (xl2 / xr1).ln()) / l2;
    assert!(
        (ci.lower - lo.clamp(0.0, 1.0)).abs() < 1e-12,
        "{} vs {lo}",
        ci.lower
    );
    assert!(
        (ci.upper - hi.clamp(0.0, 1.0)).abs() < 1e-12,
        "{} vs {hi}",
        ci.upper
    );
    // d and any positive multiple give the same interval
    let ci3 = ci_unknown_scale(
        &p,
        &a,
        &DilationDesign::new(vec![-3.0, 3.0]).unwrap(),
        alpha,
    )
    .unwrap();
    assert!((ci.lower - ci3.lower).abs() < 1e-12 && (ci.upper - ci3.upper).abs() < 1e-12);
}

#[test]
fn unknown_interval_brackets_regression_estimator() {
    for (h, seed) in [(0.2, 5), (0.5, 6), (0.8, 7)] {
        let p = path(h, 2000, seed);
        for m in [2, 5] {
            let ci = ci_unknown_scale(&p, &f("d4"), &DilationDesign::centred_log(m).unwrap(), 0.05)
                .unwrap();
            let est = estimator_gen(&p, &f("d4"), m).unwrap().clamp(0.0, 1.0);
            assert!(ci.lower <= est && est <= ci.upper);
            assert!((ci.estimator.unwrap() - est).abs() < 1e-12);
        }
    }
}

#[test]
fn scale_and_step_invariance_of_unknown_case() {
    let p = path(0.7, 500, 12);
    let a = f("i2");
    let design = DilationDesign::centred_log(3).unwrap();
    let base = ci_unknown_scale(&p, &a, &design, 0.05).unwrap();
    let base_est = estimator_gen(&p, &a, 3).unwrap();
    for c in [1e-3, 7.0, 1e3] {
        let q = p.scaled(c);
        let ci = ci_unknown_scale(&q, &a, &design, 0.05).unwrap();
        assert!((ci.lower - base.lower).abs() < 1e-12 && (ci.upper - base.upper).abs() < 1e-12);
        assert!((estimator_gen(&q, &a, 3).unwrap() - base_est).abs() < 1e-12);
    }
    let mut relabelled = p.clone();
    relabelled.step = 0.37;
    assert_eq!(
        ci_unknown_scale(&relabelled, &a, &design, 0.05).unwrap(),
        base
    );
}

#[test]
fn estimator_gen_m2_closed_form() {
    let p = path(0.45, 300, 8);
    let a = f("d4");
    let s1 = quadratic_variation(&p, &a).unwrap().s_n;
    let s2 = quadratic_variation(&p, &dilate(&a, 2)).unwrap().s_n;
    let closed = (s2 / s1).ln() / (2.0 * 2f64.ln());
    assert!((estimator_gen(&p, &a, 2).unwrap() - closed).abs() < 1e-12);
}

#[test]
fn length_constants() {
    let a = f("i2");
    let k = kappa(&a).unwrap();
    assert!(
        (known_length_constant(&a, 0.05).unwrap() - (2.0 * k * 40f64.ln()).sqrt()).abs() < 1e-12
    );
    // M = 2, d = A: (q(a) + q(a^2)) / log 2 at alpha / 4
    let d = DilationDesign::centred_log(2).unwrap();
    let q1 = q_asymptotic(0.0125, k);
    let q2 = q_asymptotic(0.0125, kappa(&dilate(&a, 2)).unwrap());
    let c = unknown_length_constant(&a, &d, 0.05).unwrap();
    assert!((c - (q1 + q2) / 2f64.ln()).abs() < 1e-12);
    // the n = 1e4 unclamped length printed for CI[i2,2]
    assert!((c / 100.0 - 0.2179).abs() < 6e-4, "{}", c / 100.0);
}

// ---- baseline

#[test]
fn bnp_minimal_sizes() {
    let hs = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
    let rows: [(f64, [usize; 9]); 3] = [
        (0.01, [271, 298, 335, 388, 471, 611, 886, 1592, 4936]),
        (0.05, [189, 208, 233, 270, 328, 425, 617, 1108, 3437]),
        (0.10, [154, 169, 190, 220, 266, 346, 501, 900, 2791]),
    ];
    for (alpha, want) in rows {
        for (h, w) in hs.iter().zip(want) {
            assert_eq!(
                bnp_min_feasible_n(alpha, *h).unwrap(),
                w,
                "alpha={alpha} H*={h}"
            );
        }
    }
}

#[test]
fn bnp_h_star() {
    let ns = [50, 100, 200, 500, 10000];
    let rows = [
        (0.01, [0.00, 0.00, 0.00, 0.53, 0.93]),
        (0.05, [0.00, 0.00, 0.17, 0.65, 0.94]),
        (0.10, [0.00, 0.00, 0.34, 0.70, 0.95]),
    ];
    for (alpha, want) in rows {
        for (n, w) in ns.iter().zip(want) {
            let v = bnp_h_star_max(alpha, *n);
            assert!((v - w).abs() < 0.005 + 1e-12, "alpha={alpha} n={n}: {v}");
        }
    }
}

#[test]
fn bnp_interval() {
    let p = path(0.5, 102, 3);
    assert!(!ci_bnp(&p, 0.01, 0.5).unwrap().feasible);
    let p = path(0.5, 2002, 3);
    let ci = ci_bnp(&p, 0.05, 0.6).unwrap();
    assert!(ci.feasible);
    let est = ci.estimator.unwrap();
    assert!(ci.lower <= est && est <= ci.upper);
    assert!(ci.lower < 0.5 && 0.5 < ci.upper, "{ci:?}");
    // inverse of the baseline g_n
    for &x in &[0.05, 0.5, 0.93] {
        assert!((gn_bnp_inverse(gn_bnp(x, 500), 500) - x).abs() < 1e-10);
    }
}

// ---- CLT

#[test]
fn normal_quantile_cross_check() {
    use statrs::function::erf::erf;
    let z = normal_quantile(0.975);
    assert!((z - 1.959964).abs() < 1e-6);
    // independent route: bisection on the erf-based cdf
    let cdf = |x: f64| 0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2));
    for &p in &[0.6, 0.9, 0.975, 0.995, 0.9995] {
        let root = crate::numerics::bisect_increasing(cdf, p, -10.0, 10.0, 1e-14);
        assert!((normal_quantile(p) - root).abs() < 1e-9, "p={p}");
    }
}

#[test]
fn sigma_gen_m2_special_case() {
    let a = f("i2");
    for &h in &[0.2, 0.5, 0.8] {
        let g11 = cross_l2_norm_sq(&a, 1, 1, h).unwrap();
        let g22 = cross_l2_norm_sq(&a, 2, 2, h).unwrap();
        let g12 = cross_l2_norm_sq(&a, 1, 2, h).unwrap();
        let want = (g11 + g22 - 2.0 * g12) / (2.0 * 2f64.ln().powi(2));
        assert!((sigma_gen(&a, h, 2).unwrap().powi(2) - want).abs() < 1e-12);
    }
}

#[test]
fn sigma_std_at_half_for_i2() {
    // rho = (1, -1/2, 0, ...) at H = 1/2, so ||rho||^2 = 3/2
    assert!((sigma_std(&f("i2"), 0.5).unwrap() - 0.75f64.sqrt()).abs() < 1e-12);
}

#[test]
fn clt_intervals_are_symmetric_and_clamped() {
    let p = path(0.3, 1000, 21);
    let a = f("i2");
    let ci = ci_clt_known(&p, &a, 0.05).unwrap();
    let est = ci.estimator.unwrap();
    assert!(((ci.upper - est) - (est - ci.lower)).abs() < 1e-12);
    let ci = ci_clt_unknown(&p, &a, 2, 0.05).unwrap();
    assert!(ci.lower >= 0.0 && ci.upper <= 1.0);
    assert!(ci_clt_known(&p, &f("i1"), 0.05).is_ok());
}

#[test]
fn length_ratio_above_one_for_i2() {
    let grid: Vec<f64> = (1..20).map(|k| k as f64 / 20.0).collect();
    let rows = length_ratio_profile(&f("i2"), None, 0.05, &grid).unwrap();
    assert!(rows.iter().all(|r| r.ratio.is_finite() && r.ratio > 1.0));
    for w in rows.windows(2) {
        assert!((w[1].ratio - w[0].ratio).abs() < 0.2);
    }
    let rows = length_ratio_profile(&f("d4"), Some(5), 0.05, &grid).unwrap();
    assert!(rows.iter().all(|r| r.ratio.is_finite() && r.ratio > 0.0));
    assert!(builtin_filter("i2").is_ok());
}
