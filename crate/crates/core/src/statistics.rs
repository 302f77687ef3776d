//! Filtered series and quadratic variations of an observed path.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fbm_sim::SamplePath;
use crate::filter_bank::{pi, Filter};
use crate::numerics::NeumaierSum;

/// V(i/n) = sum_q a_q B((i - q)/n) for i = l..n-1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilteredSeries {
    pub values: Vec<f64>,
    pub filter: String,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadraticVariation {
    pub s_n: f64,
    pub n: usize,
    /// Number of filtered values averaged, n - l.
    pub count: usize,
}

fn check_len(n: usize, filter: &Filter) -> Result<()> {
    let needed = filter.ell() + 1;
    if n < needed {
        return Err(Error::InsufficientData { needed, got: n });
    }
    Ok(())
}

pub fn filter_series(path: &SamplePath, filter: &Filter) -> Result<FilteredSeries> {
    filter_values(&path.values, filter).map(|values| FilteredSeries {
        values,
        filter: filter.name().to_string(),
        n: path.n(),
    })
}

/// Filtering on a bare slice. Zero taps (dilated filters) are skipped.
pub fn filter_values(x: &[f64], filter: &Filter) -> Result<Vec<f64>> {
    check_len(x.len(), filter)?;
    let ell = filter.ell();
    let taps: Vec<(usize, f64)> = filter
        .coeffs()
        .iter()
        .copied()
        .enumerate()
        .filter(|&(_, a)| a != 0.0)
        .collect();
    Ok((ell..x.len())
        .map(|i| {
            let mut acc = NeumaierSum::default();
            for &(q, a) in &taps {
                acc.add(a * x[i - q]);
            }
            acc.sum()
        })
        .collect())
}

pub fn quadratic_variation(path: &SamplePath, filter: &Filter) -> Result<QuadraticVariation> {
    quadratic_variation_values(&path.values, filter)
}

pub fn quadratic_variation_values(x: &[f64], filter: &Filter) -> Result<QuadraticVariation> {
    let v = filter_values(x, filter)?;
    let mut acc = NeumaierSum::default();
    for y in &v {
        acc.add(y * y);
    }
    let count = v.len();
    Ok(QuadraticVariation {
        s_n: acc.sum() / count as f64,
        n: x.len(),
        count,
    })
}

/// E[S_n] for fBm with parameters (h, c) observed at i/n.
pub fn expected_quadratic_variation(filter: &Filter, h: f64, c: f64, n: usize) -> f64 {
    c * c * pi(filter, h, 0) / (n as f64).powf(2.0 * h)
}

/// Centred normalised statistic n^{2H} S_n / (C^2 pi_H(0)) - 1.
pub fn v_n(path: &SamplePath, filter: &Filter, h: f64, c: f64) -> Result<f64> {
    let qv = quadratic_variation(path, filter)?;
    Ok(qv.s_n / expected_quadratic_variation(filter, h, c, path.n()) - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbm_sim::{FgnGenerator, SimConfig};
    use crate::filter_bank::{builtin_filter, dilate};

    fn f(c: &[f64]) -> Filter {
        Filter::new("t", c).unwrap()
    }

    #[test]
    fn small_examples() {
        let p = SamplePath::from_values(vec![0.0, 1.0, 3.0]);
        assert_eq!(
            filter_series(&p, &f(&[-1.0, 1.0])).unwrap().values,
            vec![-1.0, -2.0]
        );
        assert_eq!(
            filter_series(&p, &f(&[1.0, -1.0])).unwrap().values,
            vec![1.0, 2.0]
        );

        let lin = SamplePath::from_values((0..10).map(|i| 0.3 * i as f64).collect());
        let v = filter_series(&lin, &f(&[1.0, -2.0, 1.0])).unwrap().values;
        assert!(v.iter().all(|x| x.abs() < 1e-14));

        let alt = SamplePath::from_values(vec![0.0, 1.0, 0.0, 1.0]);
        assert_eq!(
            filter_series(&alt, &f(&[1.0, -2.0, 1.0])).unwrap().values,
            vec![-2.0, 2.0]
        );
        let qv = quadratic_variation(&alt, &f(&[1.0, -2.0, 1.0])).unwrap();
        assert_eq!(qv.s_n, 4.0);
        assert_eq!(qv.count, 2);

        let zero = SamplePath::from_values(vec![0.0; 8]);
        assert_eq!(
            quadratic_variation(&zero, &f(&[1.0, -2.0, 1.0]))
                .unwrap()
                .s_n,
            0.0
        );
    }

    #[test]
    fn too_short() {
        let p = SamplePath::from_values(vec![0.0, 1.0]);
        assert_eq!(
            filter_series(&p, &f(&[1.0, -2.0, 1.0])),
            Err(Error::InsufficientData { needed: 3, got: 2 })
        );
    }

    #[test]
    fn dilated_filter_skips_zeros_consistently() {
        let x: Vec<f64> = (0..30).map(|i| ((i * 7) % 11) as f64).collect();
        let a2 = dilate(&builtin_filter("i2").unwrap(), 2);
        let v = filter_values(&x, &a2).unwrap();
        for (k, i) in (4..30).enumerate() {
            assert_eq!(v[k], x[i] - 2.0 * x[i - 2] + x[i - 4]);
        }
    }

    #[test]
    fn constant_shift_invariance() {
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
        let y: Vec<f64> = x.iter().map(|v| v + 3.0).collect();
        let d4 = builtin_filter("d4").unwrap();
        let a = quadratic_variation_values(&x, &d4).unwrap().s_n;
        let b = quadratic_variation_values(&y, &d4).unwrap().s_n;
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn v_n_zero_at_expectation() {
        let i2 = builtin_filter("i2").unwrap();
        let path = SamplePath::from_values(vec![0.0, 1.0, 0.0, 1.0]);
        let h = 0.35;
        let c = (4.0 / expected_quadratic_variation(&i2, h, 1.0, 4)).sqrt();
        assert!(v_n(&path, &i2, h, c).unwrap().abs() < 1e-12);
    }

    #[test]
    fn dilation_pi_identity() {
        let d4 = builtin_filter("d4").unwrap();
        for m in 2..5 {
            let dm = dilate(&d4, m);
            for h in [0.2, 0.5, 0.8] {
                for j in 0..6i64 {
                    let lhs = pi(&dm, h, m as i64 * j);
                    let rhs = (m as f64).powf(2.0 * h) * pi(&d4, h, j);
                    assert!((lhs - rhs).abs() < 1e-12 * (1.0 + rhs.abs()));
                }
            }
        }
    }

    #[test]
    fn mean_of_s_n_matches_theory() {
        let i2 = builtin_filter("i2").unwrap();
        let n = 128;
        for h in [0.3, 0.7] {
            let gen = FgnGenerator::new(SimConfig::new(h, 1.0, n, 11)).unwrap();
            let reps = 2000;
            let s: Vec<f64> = (0..reps)
                .map(|r| quadratic_variation(&gen.replication(r), &i2).unwrap().s_n)
                .collect();
            let mean = s.iter().sum::<f64>() / reps as f64;
            let var = s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps as f64 - 1.0);
            let se = (var / reps as f64).sqrt();
            let expect = expected_quadratic_variation(&i2, h, 1.0, n);
            assert!(
                (mean - expect).abs() < 3.0 * se,
                "h={h}: {mean} vs {expect} (se {se})"
            );
        }
    }
}
