//! Per-class mean confirmation times under non-preemptive priority.
//!
//! Class 1 is served as if it were alone, so `E[T_1] = f(lambda_1)`. The
//! remaining classes follow from the conservation identity
//! `lambda_bar_i f(lambda_bar_i) = sum_{k<=i} lambda_k E[T_k]` applied to
//! every prefix of classes. The queue is not strictly work conserving (a
//! low-priority arrival can open a block), so the result is an
//! approximation; it matches simulation for exponential service.

use rayon::prelude::*;

use crate::batch::{solve_with, QueueConfig, SolverOptions};
use crate::error::{AnalysisError, Result};
use crate::service::ServiceDistribution;

/// Tag attached to every decomposition result shown to users.
pub const APPROXIMATION_LABEL: &str = "work-conserving approximation";

/// Ratio of high- to low-fee arrival rates in the measured data.
pub const PAPER_ZETA: f64 = 13.288;
/// Measured high-fee arrival rate, transactions per second.
pub const PAPER_LAMBDA_HIGH: f64 = 0.90466;
/// Measured low-fee arrival rate, transactions per second.
pub const PAPER_LAMBDA_LOW: f64 = 0.068082;
/// Measured classless arrival rate, transactions per second.
pub const PAPER_LAMBDA_TOTAL: f64 = 0.97275;
/// Estimated maximum number of transactions per block.
pub const PAPER_BLOCK_CAPACITY: usize = 1750;

/// Arrival rates per class (index 0 = highest priority) sharing one
/// service law and batch capacity.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorityTraffic {
    rates: Vec<f64>,
    service: ServiceDistribution,
    capacity: usize,
}

impl PriorityTraffic {
    pub fn new(rates: Vec<f64>, service: ServiceDistribution, capacity: usize) -> Result<Self> {
        if rates.is_empty() {
            return Err(AnalysisError::InvalidParameter(
                "at least one priority class is required".into(),
            ));
        }
        if let Some(r) = rates.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(AnalysisError::InvalidParameter(format!(
                "class arrival rates must be finite and positive, got {r}"
            )));
        }
        if capacity == 0 {
            return Err(AnalysisError::InvalidParameter(
                "batch capacity b must be at least 1".into(),
            ));
        }
        Ok(Self {
            rates,
            service,
            capacity,
        })
    }

    /// Two classes with `lambda_H / lambda_L = zeta` and
    /// `lambda_H + lambda_L = total`.
    pub fn two_class_by_ratio(
        total: f64,
        zeta: f64,
        service: ServiceDistribution,
        capacity: usize,
    ) -> Result<Self> {
        let (h, l) = split_by_ratio(total, zeta)?;
        Self::new(vec![h, l], service, capacity)
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn classes(&self) -> usize {
        self.rates.len()
    }

    pub fn service(&self) -> &ServiceDistribution {
        &self.service
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn total_rate(&self) -> f64 {
        self.rates.iter().sum()
    }

    /// `lambda_bar_i` for `i = 1..=c`.
    pub fn cumulative_rates(&self) -> Vec<f64> {
        self.rates
            .iter()
            .scan(0.0, |acc, r| {
                *acc += r;
                Some(*acc)
            })
            .collect()
    }

    /// Fails with the first (1-based) class whose cumulative load reaches `b`.
    pub fn check_prefix_stability(&self) -> Result<()> {
        let es = self.service.mean();
        for (i, cum) in self.cumulative_rates().into_iter().enumerate() {
            let load = cum * es;
            if load >= self.capacity as f64 {
                return Err(AnalysisError::UnstableClass {
                    class: i + 1,
                    offered_load: load,
                    capacity: self.capacity,
                });
            }
        }
        Ok(())
    }
}

/// `(zeta lambda / (1 + zeta), lambda / (1 + zeta))`.
pub fn split_by_ratio(total: f64, zeta: f64) -> Result<(f64, f64)> {
    if !(total.is_finite() && total > 0.0 && zeta.is_finite() && zeta > 0.0) {
        return Err(AnalysisError::InvalidParameter(format!(
            "total rate and ratio must be positive, got {total} and {zeta}"
        )));
    }
    Ok((zeta * total / (1.0 + zeta), total / (1.0 + zeta)))
}

/// Per-class means plus the single-class values they were built from.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassTimes {
    /// `E[T_1] ..= E[T_c]`, seconds.
    pub times: Vec<f64>,
    /// `f(lambda_bar_i)` for every prefix, seconds.
    pub aggregate: Vec<f64>,
    pub label: &'static str,
}

fn f_at(traffic: &PriorityTraffic, rate: f64, opts: &SolverOptions) -> Result<f64> {
    let cfg = QueueConfig::new(traffic.capacity, rate, traffic.service)?;
    solve_with(&cfg, opts).map(|s| s.mean_sojourn)
}

pub fn class_confirmation_times(traffic: &PriorityTraffic) -> Result<ClassTimes> {
    class_confirmation_times_with(traffic, &SolverOptions::default())
}

pub fn class_confirmation_times_with(
    traffic: &PriorityTraffic,
    opts: &SolverOptions,
) -> Result<ClassTimes> {
    traffic.check_prefix_stability()?;
    let cumulative = traffic.cumulative_rates();
    let aggregate = cumulative
        .par_iter()
        .map(|&r| f_at(traffic, r, opts))
        .collect::<Result<Vec<f64>>>()?;

    let mut times: Vec<f64> = Vec::with_capacity(traffic.classes());
    for (i, (&rate, (&cum, &f))) in traffic
        .rates
        .iter()
        .zip(cumulative.iter().zip(&aggregate))
        .enumerate()
    {
        let earlier: f64 = traffic.rates[..i]
            .iter()
            .zip(&times)
            .map(|(l, t)| l * t)
            .sum();
        times.push((cum * f - earlier) / rate);
    }
    Ok(ClassTimes {
        times,
        aggregate,
        label: APPROXIMATION_LABEL,
    })
}

/// `(E[T_H], E[T_L])` via the two-class closed form.
pub fn two_class_times(
    lambda_high: f64,
    lambda_low: f64,
    service: ServiceDistribution,
    capacity: usize,
) -> Result<(f64, f64)> {
    two_class_times_with(lambda_high, lambda_low, service, capacity, &SolverOptions::default())
}

pub fn two_class_times_with(
    lambda_high: f64,
    lambda_low: f64,
    service: ServiceDistribution,
    capacity: usize,
    opts: &SolverOptions,
) -> Result<(f64, f64)> {
    let traffic = PriorityTraffic::new(vec![lambda_high, lambda_low], service, capacity)?;
    traffic.check_prefix_stability()?;
    let (f_high, f_total) = rayon::join(
        || f_at(&traffic, lambda_high, opts),
        || f_at(&traffic, lambda_high + lambda_low, opts),
    );
    let (f_high, f_total) = (f_high?, f_total?);
    let ratio = lambda_high / lambda_low;
    Ok((f_high, (ratio + 1.0) * f_total - ratio * f_high))
}
