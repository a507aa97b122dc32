//! Mining race: `n` miners each find the winning nonce at a time uniform on
//! `(0, M)`; the block appears at the minimum `L_n`. Its exact law is
//! `1 - (1 - x/M)^n` on `[0, M]`, which approaches the exponential law with
//! rate `n/M` as `n` grows.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{AnalysisError, Result};

/// Samples drawn from one ChaCha8 stream.
const CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiningRaceConfig {
    /// Number of miners `n`.
    pub miners: usize,
    /// Size of the nonce space `M`.
    pub nonce_space: f64,
    pub samples: usize,
    pub seed: u64,
}

impl MiningRaceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.miners == 0 {
            return Err(AnalysisError::InvalidParameter("need at least one miner".into()));
        }
        if !(self.nonce_space.is_finite() && self.nonce_space > 0.0) {
            return Err(AnalysisError::InvalidParameter(format!(
                "nonce space must be positive, got {}",
                self.nonce_space
            )));
        }
        if self.samples == 0 {
            return Err(AnalysisError::InvalidParameter("need at least one sample".into()));
        }
        Ok(())
    }

    /// Rate `n/M` of the limiting exponential law.
    pub fn limiting_rate(&self) -> f64 {
        self.miners as f64 / self.nonce_space
    }

    pub fn exact_cdf(&self, x: f64) -> f64 {
        exact_race_cdf(x, self.miners, self.nonce_space)
    }

    pub fn exponential_cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            -(-self.limiting_rate() * x).exp_m1()
        }
    }
}

/// `Pr{L_n <= x} = 1 - (1 - x/M)^n`.
pub fn exact_race_cdf(x: f64, miners: usize, nonce_space: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= nonce_space {
        1.0
    } else {
        -(miners as f64 * (-x / nonce_space).ln_1p()).exp_m1()
    }
}

/// Draws `samples` realizations of `L_n`, each the minimum of `n` uniform
/// draws on `(0, M)`. Sample `i` comes from stream `i / 1024` of `seed`.
pub fn simulate_race(cfg: &MiningRaceConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let chunks = cfg.samples.div_ceil(CHUNK);
    let out: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(chunk as u64);
            let len = CHUNK.min(cfg.samples - chunk * CHUNK);
            (0..len)
                .map(|_| {
                    let mut min = f64::INFINITY;
                    for _ in 0..cfg.miners {
                        let y = rng.random::<f64>() * cfg.nonce_space;
                        if y < min {
                            min = y;
                        }
                    }
                    min
                })
                .collect()
        })
        .collect();
    Ok(out.into_iter().flatten().collect())
}

/// One-sample Kolmogorov-Smirnov distance between `sample` and `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value `sqrt(-ln(alpha/2)/2) / sqrt(n)`.
pub fn ks_critical_value(n: usize, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

/// KS distance between a simulated race and the exponential law with rate `n/M`.
pub fn exponential_approx_distance(cfg: &MiningRaceConfig) -> Result<f64> {
    let sample = simulate_race(cfg)?;
    Ok(ks_statistic(&sample, |x| cfg.exponential_cdf(x)))
}

/// `sup_x |exact(x) - exponential(x)|` without sampling, on a grid of
/// `points` in the scaled variable `u = n x / M` over `[0, min(n, 60)]`.
/// Beyond `u = 60` both laws are within `e^-60` of 1.
pub fn exact_sup_distance(miners: usize, nonce_space: f64, points: usize) -> f64 {
    let n = miners as f64;
    let u_max = n.min(60.0);
    let cfg = MiningRaceConfig {
        miners,
        nonce_space,
        samples: 1,
        seed: 0,
    };
    (0..=points)
        .map(|i| {
            let x = u_max * i as f64 / points as f64 * nonce_space / n;
            (cfg.exact_cdf(x) - cfg.exponential_cdf(x)).abs()
        })
        .fold(0.0, f64::max)
}

/// Writes `x,empirical_cdf,exact_cdf,exponential_cdf` at `points + 1`
/// evenly spaced `x` covering 99.9% of the exponential law.
pub fn write_cdf_csv<W: Write>(
    cfg: &MiningRaceConfig,
    sample: &[f64],
    points: usize,
    mut out: W,
) -> std::io::Result<()> {
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let x_max = (-(1e-3f64).ln() / cfg.limiting_rate()).min(cfg.nonce_space);
    writeln!(out, "x,empirical_cdf,exact_cdf,exponential_cdf")?;
    for i in 0..=points {
        let x = x_max * i as f64 / points.max(1) as f64;
        let below = sorted.partition_point(|v| *v <= x);
        writeln!(
            out,
            "{},{},{},{}",
            x,
            below as f64 / n,
            cfg.exact_cdf(x),
            cfg.exponential_cdf(x)
        )?;
    }
    Ok(())
}
