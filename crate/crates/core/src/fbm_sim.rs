//! Exact simulation of fractional Brownian motion on a regular grid by
//! circulant embedding of fractional Gaussian noise.
//!
//! Replication r of master seed s draws from `ChaCha20Rng::seed_from_u64(s)`
//! on stream r, so parallel runs reproduce serial ones bit for bit.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative size of a negative circulant eigenvalue that is treated as an
/// embedding failure rather than rounding noise.
const NEGATIVE_EIGEN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub hurst: f64,
    pub scale: f64,
    /// Number of observations, including B(0) = 0.
    pub n: usize,
    pub seed: u64,
    /// Time step between observations; 1/n when absent.
    pub step: Option<f64>,
}

impl SimConfig {
    pub fn new(hurst: f64, scale: f64, n: usize, seed: u64) -> Self {
        SimConfig {
            hurst,
            scale,
            n,
            seed,
            step: None,
        }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = Some(step);
        self
    }

    pub fn step(&self) -> f64 {
        self.step.unwrap_or(1.0 / self.n as f64)
    }

    fn validate(&self) -> Result<()> {
        if !(self.hurst > 0.0 && self.hurst < 1.0) {
            return Err(Error::HurstOutOfRange(self.hurst));
        }
        if !(self.scale > 0.0) {
            return Err(Error::Domain {
                what: "scale",
                value: self.scale,
            });
        }
        if self.n < 2 {
            return Err(Error::InsufficientData {
                needed: 1,
                got: self.n,
            });
        }
        if !(self.step() > 0.0) {
            return Err(Error::Domain {
                what: "step",
                value: self.step(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathMeta {
    pub hurst: f64,
    pub scale: f64,
    pub seed: u64,
    pub replication: u64,
}

/// Observations B(i * step), i = 0..n-1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    pub values: Vec<f64>,
    pub step: f64,
    pub meta: Option<PathMeta>,
}

impl SamplePath {
    /// A path with step 1/n and no ground truth.
    pub fn from_values(values: Vec<f64>) -> Self {
        let step = 1.0 / values.len().max(1) as f64;
        SamplePath {
            values,
            step,
            meta: None,
        }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn scaled(&self, c: f64) -> SamplePath {
        SamplePath {
            values: self.values.iter().map(|v| v * c).collect(),
            step: self.step,
            meta: self.meta,
        }
    }
}

/// Covariance of the increments B((i+1)/n) - B(i/n) at lag k.
pub fn fgn_autocovariance(h: f64, c: f64, n: usize, k: usize) -> f64 {
    fgn_autocovariance_step(h, c, 1.0 / n as f64, k)
}

/// Increment covariance for an arbitrary time step.
pub fn fgn_autocovariance_step(h: f64, c: f64, step: f64, k: usize) -> f64 {
    c * c * step.powf(2.0 * h) * unit_fgn_cov(h, k)
}

fn unit_fgn_cov(h: f64, k: usize) -> f64 {
    let e = 2.0 * h;
    let kf = k as f64;
    let pw = |x: f64| if x == 0.0 { 0.0 } else { x.powf(e) };
    0.5 * (pw(kf + 1.0) - 2.0 * pw(kf) + pw((kf - 1.0).abs()))
}

/// RNG for replication `index` of master seed `seed`.
pub fn replication_rng(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Precomputed circulant embedding for one (H, C, n, step).
pub struct FgnGenerator {
    config: SimConfig,
    sqrt_eig: Vec<f64>,
    fft: Option<Arc<dyn Fft<f64>>>,
    increment_scale: f64,
}

impl FgnGenerator {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let m = config.n - 1;
        let len = 2 * m;
        let mut row: Vec<Complex<f64>> = (0..len)
            .map(|k| {
                let lag = if k <= m { k } else { len - k };
                Complex::new(unit_fgn_cov(config.hurst, lag), 0.0)
            })
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(len);
        fft.process(&mut row);
        let max = row.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
        let min = row.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        if min < -NEGATIVE_EIGEN_TOL * max {
            return Err(Error::EmbeddingFailure(min));
        }
        let sqrt_eig = row
            .iter()
            .map(|z| (z.re.max(0.0) / len as f64).sqrt())
            .collect();
        Ok(FgnGenerator {
            config,
            sqrt_eig,
            fft: Some(fft),
            increment_scale: config.scale * config.step().powf(config.hurst),
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    /// n - 1 exact fGn increments.
    pub fn increments<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let m = self.config.n - 1;
        let mut w: Vec<Complex<f64>> = self
            .sqrt_eig
            .iter()
            .map(|&s| {
                let u: f64 = StandardNormal.sample(rng);
                let v: f64 = StandardNormal.sample(rng);
                Complex::new(s * u, s * v)
            })
            .collect();
        if let Some(fft) = &self.fft {
            fft.process(&mut w);
        }
        w.iter()
            .take(m)
            .map(|z| z.re * self.increment_scale)
            .collect()
    }

    pub fn path<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let inc = self.increments(rng);
        let mut values = Vec::with_capacity(inc.len() + 1);
        let mut acc = 0.0;
        values.push(0.0);
        for x in inc {
            acc += x;
            values.push(acc);
        }
        values
    }

    pub fn replication(&self, index: u64) -> SamplePath {
        let mut rng = replication_rng(self.config.seed, index);
        SamplePath {
            values: self.path(&mut rng),
            step: self.config.step(),
            meta: Some(PathMeta {
                hurst: self.config.hurst,
                scale: self.config.scale,
                seed: self.config.seed,
                replication: index,
            }),
        }
    }
}

/// One path (replication 0 of the configured seed).
pub fn simulate(config: &SimConfig) -> Result<SamplePath> {
    Ok(FgnGenerator::new(*config)?.replication(0))
}
