//! Block-generation (service) time distributions.
//!
//! A mined block is one batch service; its duration `S` is drawn from a
//! [`ServiceDistribution`]. The solver only needs `E[S]`, `E[S^2]` and the
//! Laplace-Stieltjes transform `G*(s) = E[exp(-sS)]` at complex arguments.
//!
//! Exponential service is the fitted model. Deterministic and Erlang kinds
//! are experimental and exist to exercise the general-G solver path.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{AnalysisError, Result};

/// Rate of the fitted exponential block-generation model, in 1/s.
pub const PAPER_BLOCK_RATE: f64 = 1.8379e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ServiceKind {
    Exponential { rate: f64 },
    Deterministic { duration: f64 },
    Erlang { shape: u32, rate: f64 },
}

/// Distribution of the block-generation time. Immutable once built.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceDistribution {
    kind: ServiceKind,
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(AnalysisError::InvalidParameter(format!(
            "{name} must be finite and positive, got {v}"
        )))
    }
}

impl ServiceDistribution {
    pub fn exponential(rate: f64) -> Result<Self> {
        let rate = positive("exponential rate", rate)?;
        Ok(Self {
            kind: ServiceKind::Exponential { rate },
        })
    }

    pub fn deterministic(duration: f64) -> Result<Self> {
        let duration = positive("deterministic duration", duration)?;
        Ok(Self {
            kind: ServiceKind::Deterministic { duration },
        })
    }

    pub fn erlang(shape: u32, rate: f64) -> Result<Self> {
        if shape == 0 {
            return Err(AnalysisError::InvalidParameter(
                "Erlang shape must be at least 1".into(),
            ));
        }
        let rate = positive("Erlang rate", rate)?;
        Ok(Self {
            kind: ServiceKind::Erlang { shape, rate },
        })
    }

    /// The exponential model with rate 1.8379e-3 /s (mean 544.09 s).
    pub fn paper_default() -> Self {
        Self {
            kind: ServiceKind::Exponential {
                rate: PAPER_BLOCK_RATE,
            },
        }
    }

    pub fn kind(&self) -> ServiceKind {
        self.kind
    }

    pub fn is_exponential(&self) -> bool {
        matches!(self.kind, ServiceKind::Exponential { .. })
    }

    /// `E[S]` in seconds.
    pub fn mean(&self) -> f64 {
        match self.kind {
            ServiceKind::Exponential { rate } => 1.0 / rate,
            ServiceKind::Deterministic { duration } => duration,
            ServiceKind::Erlang { shape, rate } => shape as f64 / rate,
        }
    }

    /// `E[S^2]` in seconds squared.
    pub fn second_moment(&self) -> f64 {
        match self.kind {
            ServiceKind::Exponential { rate } => 2.0 / (rate * rate),
            ServiceKind::Deterministic { duration } => duration * duration,
            ServiceKind::Erlang { shape, rate } => {
                let k = shape as f64;
                k * (k + 1.0) / (rate * rate)
            }
        }
    }

    /// Laplace-Stieltjes transform `G*(s)`, principal branch.
    pub fn lst(&self, s: Complex64) -> Result<Complex64> {
        match self.kind {
            ServiceKind::Exponential { rate } => {
                let d = s + rate;
                if d.norm() == 0.0 {
                    return Err(AnalysisError::Pole(-rate));
                }
                Ok(Complex64::from(rate) / d)
            }
            ServiceKind::Deterministic { duration } => Ok((-s * duration).exp()),
            ServiceKind::Erlang { shape, rate } => {
                let d = s + rate;
                if d.norm() == 0.0 {
                    return Err(AnalysisError::Pole(-rate));
                }
                Ok((Complex64::from(rate) / d).powu(shape))
            }
        }
    }

    /// A logarithm of `G*(s)` continuous on `Re(s) > -rate`. For the
    /// exponential kind it coincides with the principal logarithm; for the
    /// other kinds the principal one wraps once `|arg G*|` exceeds pi.
    pub fn lst_log(&self, s: Complex64) -> Result<Complex64> {
        match self.kind {
            ServiceKind::Exponential { rate } => {
                let d = s + rate;
                if d.norm() == 0.0 {
                    return Err(AnalysisError::Pole(-rate));
                }
                Ok(rate.ln() - d.ln())
            }
            ServiceKind::Deterministic { duration } => Ok(-s * duration),
            ServiceKind::Erlang { shape, rate } => {
                let d = s + rate;
                if d.norm() == 0.0 {
                    return Err(AnalysisError::Pole(-rate));
                }
                Ok(shape as f64 * (rate.ln() - d.ln()))
            }
        }
    }

    /// `dG*/ds`, used for Newton polishing of the characteristic roots.
    pub(crate) fn lst_derivative(&self, s: Complex64) -> Result<Complex64> {
        match self.kind {
            ServiceKind::Exponential { rate } => {
                let d = s + rate;
                if d.norm() == 0.0 {
                    return Err(AnalysisError::Pole(-rate));
                }
                Ok(-rate / (d * d))
            }
            ServiceKind::Deterministic { duration } => Ok(-duration * (-s * duration).exp()),
            ServiceKind::Erlang { shape, rate } => {
                let d = s + rate;
                if d.norm() == 0.0 {
                    return Err(AnalysisError::Pole(-rate));
                }
                let k = shape as f64;
                Ok(-k * rate.powi(shape as i32) / d.powu(shape + 1))
            }
        }
    }

    /// Density at `x`; `None` for the deterministic kind.
    pub fn pdf(&self, x: f64) -> Option<f64> {
        if x < 0.0 {
            return Some(0.0);
        }
        match self.kind {
            ServiceKind::Exponential { rate } => Some(rate * (-rate * x).exp()),
            ServiceKind::Deterministic { .. } => None,
            ServiceKind::Erlang { shape, rate } => {
                let k = shape as i32;
                let log_fact: f64 = (1..shape).map(|i| (i as f64).ln()).sum();
                Some((k as f64 * rate.ln() + (k - 1) as f64 * x.ln() - rate * x - log_fact).exp())
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self.kind {
            ServiceKind::Exponential { rate } => -(-rate * x).exp_m1(),
            ServiceKind::Deterministic { duration } => {
                if x >= duration {
                    1.0
                } else {
                    0.0
                }
            }
            ServiceKind::Erlang { shape, rate } => {
                // 1 - sum_{n<k} e^{-rx} (rx)^n / n!
                let rx = rate * x;
                let mut term = (-rx).exp();
                let mut tail = 0.0;
                for n in 0..shape {
                    if n > 0 {
                        term *= rx / n as f64;
                    }
                    tail += term;
                }
                (1.0 - tail).max(0.0)
            }
        }
    }

    /// Draws one service time by inverse transform.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            ServiceKind::Exponential { rate } => exp_variate(rng, rate),
            ServiceKind::Deterministic { duration } => duration,
            ServiceKind::Erlang { shape, rate } => {
                (0..shape).map(|_| exp_variate(rng, rate)).sum()
            }
        }
    }
}

/// Exponential variate by inverse transform, `-ln(1-U)/rate` with `U` in [0,1).
pub(crate) fn exp_variate<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    let u: f64 = rng.random();
    -(-u).ln_1p() / rate
}

/// Fixed-width binning used to compare measured block times with the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramConfig {
    pub bin_width: f64,
    pub upper: f64,
}

impl Default for HistogramConfig {
    fn default() -> Self {
        // 6600 s covers the longest observed block interval (6524 s).
        Self {
            bin_width: 60.0,
            upper: 6600.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    /// `count / total`.
    pub relative_frequency: f64,
    /// `count / (total * width)`, comparable with `model_density`.
    pub empirical_density: f64,
    /// Fitted density at the bin midpoint.
    pub model_density: f64,
    /// Fitted probability mass of the bin.
    pub model_probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentialFit {
    pub distribution: ServiceDistribution,
    pub rate: f64,
    pub sample_mean: f64,
    pub sample_count: usize,
    pub bins: Vec<HistogramBin>,
    /// Samples at or above `HistogramConfig::upper`.
    pub overflow: usize,
}

/// Fits the exponential model by matching the sample mean.
///
/// Zeros are accepted: measured block timestamps are not monotone, so
/// clamped inter-block gaps of 0 s do occur.
pub fn fit_exponential(samples: &[f64]) -> Result<ExponentialFit> {
    fit_exponential_with(samples, HistogramConfig::default())
}

pub fn fit_exponential_with(samples: &[f64], hist: HistogramConfig) -> Result<ExponentialFit> {
    if samples.is_empty() {
        return Err(AnalysisError::EmptyInput("block-generation samples"));
    }
    if let Some(bad) = samples.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(AnalysisError::InvalidParameter(format!(
            "block-generation time must be finite and non-negative, got {bad}"
        )));
    }
    if !(hist.bin_width > 0.0 && hist.upper > 0.0) {
        return Err(AnalysisError::InvalidParameter(
            "histogram bin width and upper bound must be positive".into(),
        ));
    }
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    if mean == 0.0 {
        return Err(AnalysisError::InvalidParameter(
            "all samples are zero; rate is undefined".into(),
        ));
    }
    let rate = 1.0 / mean;
    let distribution = ServiceDistribution::exponential(rate)?;

    let nbins = (hist.upper / hist.bin_width).ceil() as usize;
    let mut counts = vec![0usize; nbins];
    let mut overflow = 0;
    for &x in samples {
        let idx = (x / hist.bin_width) as usize;
        if x >= hist.upper || idx >= nbins {
            overflow += 1;
        } else {
            counts[idx] += 1;
        }
    }
    let total = n as f64;
    let bins = counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| {
            let lower = i as f64 * hist.bin_width;
            let upper = (lower + hist.bin_width).min(hist.upper);
            let width = upper - lower;
            HistogramBin {
                lower,
                upper,
                count,
                relative_frequency: count as f64 / total,
                empirical_density: count as f64 / (total * width),
                model_density: rate * (-rate * 0.5 * (lower + upper)).exp(),
                model_probability: distribution.cdf(upper) - distribution.cdf(lower),
            }
        })
        .collect();

    Ok(ExponentialFit {
        distribution,
        rate,
        sample_mean: mean,
        sample_count: n,
        bins,
        overflow,
    })
}
