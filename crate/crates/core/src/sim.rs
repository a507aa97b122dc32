//! Discrete-event simulation of the batch-service priority queue.
//!
//! Event semantics of one replication:
//!
//! 1. each class receives Poisson arrivals (inverse-transform exponential
//!    gaps);
//! 2. an arrival to an idle system starts mining a block;
//! 3. a block holds at most `b` transactions; while it is being mined,
//!    newly arriving transactions are eligible for it;
//! 4. when mining completes the block's members are confirmed; if
//!    transactions remain, the next block starts at once;
//! 5. mining times are drawn from the service distribution.
//!
//! Which transactions end up in a block depends on [`BlockFill`]:
//!
//! * [`BlockFill::PriorityAtCompletion`] (default): the block confirms the
//!   `min(N, b)` highest-priority transactions present when mining
//!   completes, FIFO within a class. A high-fee arrival therefore takes a
//!   slot ahead of low-fee transactions already earmarked for the block,
//!   and the high class sees exactly the single-class queue.
//! * [`BlockFill::Frozen`]: membership is fixed on joining. The next block
//!   is seeded with up to `b` queued transactions (class first, FIFO within
//!   class) and arrivals of any class join it while it has room.
//!
//! Replications run in parallel, each on its own ChaCha8 stream selected by
//! the replication index, and are aggregated in index order so results are
//! bit-for-bit reproducible.

use std::collections::VecDeque;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{AnalysisError, Result};
use crate::priority::{class_confirmation_times, PriorityTraffic, APPROXIMATION_LABEL};
use crate::service::exp_variate;

/// Queue length that marks a replication as diverging.
pub const INSTABILITY_QUEUE_LIMIT: usize = 1_000_000;
/// Maximum relative gap tolerated by the Little's-law check.
pub const LITTLE_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BlockFill {
    #[default]
    PriorityAtCompletion,
    Frozen,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub traffic: PriorityTraffic,
    pub seed: u64,
    pub replications: usize,
    /// Confirmations discarded before measuring.
    pub warmup: usize,
    /// Confirmations measured per replication.
    pub horizon: usize,
    pub fill: BlockFill,
}

impl SimConfig {
    pub fn new(traffic: PriorityTraffic, seed: u64) -> Self {
        Self {
            traffic,
            seed,
            replications: 50,
            warmup: 10_000,
            horizon: 100_000,
            fill: BlockFill::default(),
        }
    }

    pub fn with_replications(mut self, n: usize) -> Self {
        self.replications = n;
        self
    }

    pub fn with_warmup(mut self, n: usize) -> Self {
        self.warmup = n;
        self
    }

    pub fn with_horizon(mut self, n: usize) -> Self {
        self.horizon = n;
        self
    }

    pub fn with_fill(mut self, fill: BlockFill) -> Self {
        self.fill = fill;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.replications < 2 {
            return Err(AnalysisError::InvalidParameter(
                "at least 2 replications are needed for a confidence interval".into(),
            ));
        }
        if self.horizon == 0 {
            return Err(AnalysisError::InvalidParameter(
                "horizon must be at least one confirmation".into(),
            ));
        }
        Ok(())
    }
}

/// One simulated transaction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transaction {
    /// Arrival sequence number across all classes.
    pub id: u64,
    /// 0-based class index.
    pub class: usize,
    pub arrival: f64,
    /// Instant the transaction entered the block it was confirmed in.
    pub joined: f64,
}

/// A confirmed block, reported to observers.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTrace {
    pub opened: f64,
    pub confirmed: f64,
    pub members: Vec<Transaction>,
}

/// Output of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationResult {
    pub index: usize,
    /// Mean confirmation time per class; `None` if a class saw no
    /// measured confirmation.
    pub class_means: Vec<Option<f64>>,
    pub class_counts: Vec<usize>,
    pub overall_mean: f64,
    /// Time-weighted fraction of the measurement window with an empty system.
    pub idle_fraction: f64,
    /// Time-averaged number in system over the measurement window.
    pub mean_in_system: f64,
    pub arrivals: u64,
    pub departures: u64,
    pub in_system_at_end: u64,
    pub largest_block: usize,
    /// Set when the queue exceeded [`INSTABILITY_QUEUE_LIMIT`].
    pub diverged: bool,
}

struct Engine<'a> {
    traffic: &'a PriorityTraffic,
    fill: BlockFill,
    rng: ChaCha8Rng,
    now: f64,
    queues: Vec<VecDeque<Transaction>>,
    queued: usize,
    block: Vec<Transaction>,
    block_opened: f64,
    completion: Option<f64>,
    next_arrival: Vec<f64>,
    next_id: u64,
    departures: u64,
    largest_block: usize,
}

impl<'a> Engine<'a> {
    fn new(traffic: &'a PriorityTraffic, fill: BlockFill, rng: ChaCha8Rng) -> Self {
        let c = traffic.classes();
        let mut e = Self {
            traffic,
            fill,
            rng,
            now: 0.0,
            queues: vec![VecDeque::new(); c],
            queued: 0,
            block: Vec::with_capacity(traffic.capacity()),
            block_opened: 0.0,
            completion: None,
            next_arrival: vec![0.0; c],
            next_id: 0,
            departures: 0,
            largest_block: 0,
        };
        for k in 0..c {
            e.next_arrival[k] = exp_variate(&mut e.rng, traffic.rates()[k]);
        }
        e
    }

    fn in_system(&self) -> usize {
        self.queued + self.block.len()
    }

    fn start_service(&mut self) {
        self.block_opened = self.now;
        let s = self.traffic.service().sample(&mut self.rng);
        self.completion = Some(self.now + s);
    }

    /// Moves up to `b - |block|` queued transactions into the block, by
    /// class then FIFO.
    fn refill(&mut self) {
        let b = self.traffic.capacity();
        for q in self.queues.iter_mut() {
            while self.block.len() < b {
                match q.pop_front() {
                    Some(mut tx) => {
                        tx.joined = self.now;
                        self.queued -= 1;
                        self.block.push(tx);
                    }
                    None => break,
                }
            }
        }
    }

    fn arrive(&mut self, class: usize) {
        let tx = Transaction {
            id: self.next_id,
            class,
            arrival: self.now,
            joined: self.now,
        };
        self.next_id += 1;
        self.next_arrival[class] = self.now + exp_variate(&mut self.rng, self.traffic.rates()[class]);

        let b = self.traffic.capacity();
        match self.fill {
            BlockFill::Frozen => {
                if self.completion.is_none() {
                    self.block.push(tx);
                    self.start_service();
                } else if self.block.len() < b {
                    self.block.push(tx);
                } else {
                    self.queues[class].push_back(tx);
                    self.queued += 1;
                }
            }
            BlockFill::PriorityAtCompletion => {
                // Everything waits in the class queues; the block is chosen
                // when mining completes.
                self.queues[class].push_back(tx);
                self.queued += 1;
                if self.completion.is_none() {
                    self.start_service();
                }
            }
        }
    }

    /// Confirms the current block and returns it.
    fn complete(&mut self) -> BlockTrace {
        if self.fill == BlockFill::PriorityAtCompletion {
            self.refill();
        }
        let opened = self.block_opened;
        let members = std::mem::take(&mut self.block);
        self.departures += members.len() as u64;
        self.largest_block = self.largest_block.max(members.len());
        self.block = Vec::with_capacity(self.traffic.capacity());
        self.completion = None;
        if self.queued > 0 {
            if self.fill == BlockFill::Frozen {
                self.refill();
            }
            self.start_service();
        }
        BlockTrace {
            opened,
            confirmed: self.now,
            members,
        }
    }

    /// Advances to the next event. Returns the confirmed block, if the event
    /// was a completion.
    fn step(&mut self, window: &mut Option<Window>) -> Option<BlockTrace> {
        let (class, t_arr) = self
            .next_arrival
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |best, (k, &t)| if t < best.1 { (k, t) } else { best });
        let completion_first = matches!(self.completion, Some(tc) if tc <= t_arr);
        let t_next = if completion_first {
            self.completion.unwrap_or(t_arr)
        } else {
            t_arr
        };
        if let Some(w) = window.as_mut() {
            let dt = t_next - self.now;
            let n = self.in_system();
            w.area += n as f64 * dt;
            if n == 0 {
                w.idle += dt;
            }
        }
        self.now = t_next;
        if completion_first {
            Some(self.complete())
        } else {
            self.arrive(class);
            None
        }
    }
}

struct Window {
    start: f64,
    area: f64,
    idle: f64,
}

fn replication_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn run_with<F: FnMut(&BlockTrace)>(cfg: &SimConfig, index: usize, mut observe: F) -> ReplicationResult {
    let traffic = &cfg.traffic;
    let c = traffic.classes();
    let mut engine = Engine::new(traffic, cfg.fill, replication_rng(cfg.seed, index));

    let mut confirmed: usize = 0;
    let mut sums = vec![0.0f64; c];
    let mut counts = vec![0usize; c];
    let mut window: Option<Window> = None;
    let mut diverged = false;
    let target = cfg.warmup + cfg.horizon;

    if cfg.warmup == 0 {
        window = Some(Window { start: 0.0, area: 0.0, idle: 0.0 });
    }

    while confirmed < target {
        let Some(block) = engine.step(&mut window) else {
            if engine.queued > INSTABILITY_QUEUE_LIMIT {
                diverged = true;
                break;
            }
            continue;
        };
        for tx in &block.members {
            if confirmed >= cfg.warmup {
                sums[tx.class] += block.confirmed - tx.arrival;
                counts[tx.class] += 1;
            }
            confirmed += 1;
        }
        if window.is_none() && confirmed >= cfg.warmup {
            window = Some(Window {
                start: engine.now,
                area: 0.0,
                idle: 0.0,
            });
        }
        observe(&block);
    }

    let (idle_fraction, mean_in_system) = match &window {
        Some(w) if engine.now > w.start => {
            let span = engine.now - w.start;
            (w.idle / span, w.area / span)
        }
        _ => (f64::NAN, f64::NAN),
    };
    let total: usize = counts.iter().sum();
    ReplicationResult {
        index,
        class_means: sums
            .iter()
            .zip(&counts)
            .map(|(s, &n)| (n > 0).then(|| s / n as f64))
            .collect(),
        class_counts: counts,
        overall_mean: if total > 0 {
            sums.iter().sum::<f64>() / total as f64
        } else {
            f64::NAN
        },
        idle_fraction,
        mean_in_system,
        arrivals: engine.next_id,
        departures: engine.departures,
        in_system_at_end: engine.in_system() as u64,
        largest_block: engine.largest_block,
        diverged,
    }
}

/// Runs replication `index` of `cfg`.
pub fn run_replication(cfg: &SimConfig, index: usize) -> ReplicationResult {
    run_with(cfg, index, |_| {})
}

/// Runs replication `index` and hands every confirmed block (including
/// warmup blocks) to `observe`.
pub fn run_replication_observed<F: FnMut(&BlockTrace)>(
    cfg: &SimConfig,
    index: usize,
    observe: F,
) -> ReplicationResult {
    run_with(cfg, index, observe)
}

/// Aggregate of all replications.
#[derive(Debug, Clone, PartialEq)]
pub struct SimEstimate {
    /// Mean confirmation time per class, seconds.
    pub class_means: Vec<f64>,
    /// 95% confidence half-width per class, seconds.
    pub class_half_widths: Vec<f64>,
    pub overall_mean: f64,
    pub overall_half_width: f64,
    pub idle_fraction: f64,
    pub mean_in_system: f64,
    /// Replications that did not diverge and contributed to the estimate.
    pub successful: usize,
    pub replications: Vec<ReplicationResult>,
}

impl SimEstimate {
    pub fn any_diverged(&self) -> bool {
        self.replications.iter().any(|r| r.diverged)
    }

    pub fn class_interval(&self, class: usize) -> (f64, f64) {
        let m = self.class_means[class];
        let h = self.class_half_widths[class];
        (m - h, m + h)
    }
}

/// Two-sided 95% Student-t quantile with `n - 1` degrees of freedom.
pub fn t_quantile_95(n: usize) -> f64 {
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("n >= 2");
    t.inverse_cdf(0.975)
}

/// Mean and 95% half-width of `xs` (length >= 2).
pub fn mean_and_half_width(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, t_quantile_95(n) * (var / n as f64).sqrt())
}

pub fn estimate(cfg: &SimConfig) -> Result<SimEstimate> {
    cfg.validate()?;
    let runs: Vec<ReplicationResult> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| run_replication(cfg, r))
        .collect();

    let ok: Vec<&ReplicationResult> = runs.iter().filter(|r| !r.diverged).collect();
    if ok.len() < 2 {
        return Err(AnalysisError::TooFewReplications {
            successful: ok.len(),
        });
    }
    let c = cfg.traffic.classes();
    let mut class_means = Vec::with_capacity(c);
    let mut class_half_widths = Vec::with_capacity(c);
    for k in 0..c {
        let xs: Vec<f64> = ok.iter().filter_map(|r| r.class_means[k]).collect();
        if xs.len() < 2 {
            class_means.push(f64::NAN);
            class_half_widths.push(f64::NAN);
        } else {
            let (m, h) = mean_and_half_width(&xs);
            class_means.push(m);
            class_half_widths.push(h);
        }
    }
    let overall: Vec<f64> = ok.iter().map(|r| r.overall_mean).collect();
    let (overall_mean, overall_half_width) = mean_and_half_width(&overall);
    let avg = |f: fn(&ReplicationResult) -> f64| ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64;
    Ok(SimEstimate {
        class_means,
        class_half_widths,
        overall_mean,
        overall_half_width,
        idle_fraction: avg(|r| r.idle_fraction),
        mean_in_system: avg(|r| r.mean_in_system),
        successful: ok.len(),
        replications: runs,
    })
}

/// Writes `replication,class,mean_tct_s` rows (class is 1-based).
pub fn write_replication_csv<W: Write>(est: &SimEstimate, mut out: W) -> std::io::Result<()> {
    writeln!(out, "replication,class,mean_tct_s")?;
    for r in &est.replications {
        for (k, m) in r.class_means.iter().enumerate() {
            match m {
                Some(v) => writeln!(out, "{},{},{}", r.index, k + 1, v)?,
                None => writeln!(out, "{},{},", r.index, k + 1)?,
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassCheck {
    /// 1-based class index.
    pub class: usize,
    pub analytic: f64,
    pub simulated: f64,
    pub half_width: f64,
    pub analytic_inside_ci: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LittleCheck {
    pub mean_in_system: f64,
    pub rate_times_sojourn: f64,
    pub relative_gap: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub classes: Vec<ClassCheck>,
    pub little: LittleCheck,
    pub estimate: SimEstimate,
    pub label: &'static str,
}

impl ValidationReport {
    pub fn all_inside(&self) -> bool {
        self.classes.iter().all(|c| c.analytic_inside_ci)
    }
}

/// Simulates `cfg` and compares every class with the decomposition.
pub fn verify_against_analysis(cfg: &SimConfig) -> Result<ValidationReport> {
    if cfg.traffic.classes() == 0 {
        return Err(AnalysisError::InvalidParameter("no classes".into()));
    }
    let analytic = class_confirmation_times(&cfg.traffic)?;
    let est = estimate(cfg)?;
    let classes = analytic
        .times
        .iter()
        .enumerate()
        .map(|(k, &a)| {
            let (lo, hi) = est.class_interval(k);
            ClassCheck {
                class: k + 1,
                analytic: a,
                simulated: est.class_means[k],
                half_width: est.class_half_widths[k],
                analytic_inside_ci: lo <= a && a <= hi,
            }
        })
        .collect();
    let rate_times_sojourn = cfg.traffic.total_rate() * est.overall_mean;
    let relative_gap = (est.mean_in_system - rate_times_sojourn).abs() / est.mean_in_system;
    Ok(ValidationReport {
        classes,
        little: LittleCheck {
            mean_in_system: est.mean_in_system,
            rate_times_sojourn,
            relative_gap,
            pass: relative_gap <= LITTLE_TOLERANCE,
        },
        estimate: est,
        label: APPROXIMATION_LABEL,
    })
}
