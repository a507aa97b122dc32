use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use rayon::prelude::*;
use txconfirm_core::batch::{solve_with, QueueConfig};
use txconfirm_core::chain::{self, ClassRule, Satoshi};
use txconfirm_core::mining::{self, MiningRaceConfig};
use txconfirm_core::priority::{
    class_confirmation_times_with, two_class_times_with, PriorityTraffic, APPROXIMATION_LABEL,
    PAPER_BLOCK_CAPACITY, PAPER_LAMBDA_HIGH, PAPER_LAMBDA_LOW, PAPER_LAMBDA_TOTAL, PAPER_ZETA,
};
use txconfirm_core::service::{fit_exponential, PAPER_BLOCK_RATE};
use txconfirm_core::sim::{self, SimConfig};
use txconfirm_core::{AnalysisError, ServiceDistribution, ServiceKind};

use crate::config::{or_config, usage, FillArg, Model};

/// A validation run found a failing check; maps to exit code 1.
#[derive(Debug)]
pub struct ValidationFailed(pub usize);

impl std::fmt::Display for ValidationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} check(s) failed", self.0)
    }
}

impl std::error::Error for ValidationFailed {}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn describe(service: &ServiceDistribution) -> String {
    match service.kind() {
        ServiceKind::Exponential { rate } => format!("exponential(rate={rate})"),
        ServiceKind::Deterministic { duration } => format!("deterministic(duration={duration})"),
        ServiceKind::Erlang { shape, rate } => format!("erlang(shape={shape}, rate={rate})"),
    }
}

fn class_label(k: usize, classes: usize) -> String {
    match (classes, k) {
        (2, 0) => "H".into(),
        (2, 1) => "L".into(),
        _ => (k + 1).to_string(),
    }
}

fn check_rate(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        usage(format!("--{name} must be positive, got {v}"))
    }
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    /// Total arrival rate (transactions per second).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// High-priority arrival rate.
    #[arg(long)]
    pub lambda_high: Option<f64>,
    /// Low-priority arrival rate.
    #[arg(long)]
    pub lambda_low: Option<f64>,
    /// Per-class arrival rates, highest priority first.
    #[arg(long, value_delimiter = ',')]
    pub rates: Vec<f64>,
    /// Split --lambda into two classes with lambda_H / lambda_L = zeta.
    #[arg(long)]
    pub zeta: Option<f64>,
    /// Also write `lambda,b,class,mean_tct_s` rows here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn analyze(model: &Model, args: &AnalyzeArgs) -> Result<()> {
    let cfg = &model.config;
    let b = model.capacity()?;
    let lambda = or_config(args.lambda, cfg, "lambda")?;
    let high = or_config(args.lambda_high, cfg, "lambda_high")?;
    let low = or_config(args.lambda_low, cfg, "lambda_low")?;
    let zeta = or_config(args.zeta, cfg, "zeta")?;

    let mut classes: Vec<f64> = args.rates.clone();
    if classes.is_empty() {
        match (high, low) {
            (Some(h), Some(l)) => classes = vec![h, l],
            (None, None) => {}
            _ => return usage("--lambda-high and --lambda-low must be given together"),
        }
    }
    if classes.is_empty() {
        if let (Some(l), Some(z)) = (lambda, zeta) {
            let (h, lo) = txconfirm_core::priority::split_by_ratio(l, z)
                .map_err(|e| crate::config::UsageError(e.to_string()))?;
            classes = vec![h, lo];
        }
    }
    let lambda = match lambda {
        Some(l) => Some(l),
        None if model.paper && classes.is_empty() => {
            classes = vec![PAPER_LAMBDA_HIGH, PAPER_LAMBDA_LOW];
            Some(PAPER_LAMBDA_TOTAL)
        }
        None if !classes.is_empty() => Some(classes.iter().sum()),
        None => return usage("give --lambda, --rates, or --lambda-high/--lambda-low"),
    };
    let lambda = check_rate("lambda", lambda.unwrap_or_default())?;
    for r in &classes {
        check_rate("rates", *r)?;
    }

    let qc = QueueConfig::new(b, lambda, model.service)
        .map_err(|e| crate::config::UsageError(e.to_string()))?;
    let mut text = String::new();
    writeln!(text, "b = {b}")?;
    writeln!(text, "service = {}", describe(&model.service))?;
    writeln!(text, "mean_service_s = {}", model.service.mean())?;
    writeln!(text, "lambda = {lambda}")?;
    writeln!(text, "offered_load = {}", qc.offered_load())?;
    let sol = solve_with(&qc, &model.options)?;
    writeln!(text, "mean_tct_s = {:.6}", sol.mean_sojourn)?;
    writeln!(text, "mean_in_system = {:.6}", sol.mean_number_in_system())?;
    writeln!(text, "p0 = {:e}", sol.p0)?;
    writeln!(text, "root_residual = {:e}", sol.residual)?;
    writeln!(text, "system_residual = {:e}", sol.system_residual)?;
    writeln!(text, "precision = {}", format!("{:?}", sol.precision_used).to_lowercase())?;

    let mut csv = String::from("lambda,b,class,mean_tct_s\n");
    writeln!(csv, "{lambda},{b},all,{}", sol.mean_sojourn)?;
    if !classes.is_empty() {
        let traffic = PriorityTraffic::new(classes.clone(), model.service, b)
            .map_err(|e| crate::config::UsageError(e.to_string()))?;
        let times = class_confirmation_times_with(&traffic, &model.options)?;
        writeln!(text, "classes ({}):", times.label)?;
        for (k, (r, t)) in classes.iter().zip(&times.times).enumerate() {
            let label = class_label(k, classes.len());
            writeln!(text, "  {label}: lambda = {r}, mean_tct_s = {t:.6}")?;
            writeln!(csv, "{r},{b},{label},{t}")?;
        }
    }
    print!("{text}");
    if let Some(p) = &args.out {
        emit(Some(p), &csv)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepMode {
    /// One class at total rate lambda.
    Classless,
    /// Two classes with a fixed ratio lambda_H / lambda_L; lambda is the total.
    Zeta,
    /// Two classes with lambda_H fixed; lambda is lambda_L.
    FixedHigh,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum, default_value = "classless")]
    pub mode: SweepMode,
    #[arg(long)]
    pub lambda_start: f64,
    #[arg(long)]
    pub lambda_stop: f64,
    /// Evenly spaced grid points, both ends included.
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    /// Block capacities to sweep; defaults to --b.
    #[arg(long, value_delimiter = ',')]
    pub b_list: Vec<usize>,
    #[arg(long)]
    pub zeta: Option<f64>,
    /// Fixed high-priority rate for --mode fixed-high.
    #[arg(long)]
    pub lambda_high: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

enum Cell {
    Value(f64),
    Unstable,
    Failed(AnalysisError),
}

impl Cell {
    fn from_result(r: Result<f64, AnalysisError>) -> Self {
        match r {
            Ok(v) => Cell::Value(v),
            Err(AnalysisError::Unstable { .. } | AnalysisError::UnstableClass { .. }) => {
                Cell::Unstable
            }
            Err(e) => Cell::Failed(e),
        }
    }
}

fn sweep_grid(start: f64, stop: f64, points: usize) -> Result<Vec<f64>> {
    if !(start.is_finite() && stop.is_finite() && start > 0.0 && stop >= start) {
        return usage(format!("need 0 < --lambda-start <= --lambda-stop, got {start} and {stop}"));
    }
    if points == 0 {
        return usage("--points must be at least 1");
    }
    if points == 1 {
        return Ok(vec![start]);
    }
    let step = (stop - start) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| if i + 1 == points { stop } else { start + step * i as f64 })
        .collect())
}

fn two_class_cells(model: &Model, b: usize, high: f64, low: f64) -> Vec<Cell> {
    let f = |rate: f64| -> Result<f64, AnalysisError> {
        solve_with(&QueueConfig::new(b, rate, model.service)?, &model.options).map(|s| s.mean_sojourn)
    };
    match two_class_times_with(high, low, model.service, b, &model.options) {
        Ok((h, l)) => vec![Cell::Value(h), Cell::Value(l)],
        Err(AnalysisError::UnstableClass { class: 2, .. }) => {
            vec![Cell::from_result(f(high)), Cell::Unstable]
        }
        Err(e) => {
            let c = Cell::from_result(Err(e.clone()));
            vec![c, Cell::from_result(Err(e))]
        }
    }
}

pub fn sweep(model: &Model, args: &SweepArgs) -> Result<()> {
    let grid = sweep_grid(args.lambda_start, args.lambda_stop, args.points)?;
    let bs = if args.b_list.is_empty() {
        vec![model.capacity()?]
    } else {
        args.b_list.clone()
    };
    if bs.contains(&0) {
        return usage("block capacities must be at least 1");
    }
    let zeta = model.zeta(args.zeta)?;
    let fixed_high = or_config(args.lambda_high, &model.config, "lambda_high")?
        .unwrap_or(PAPER_LAMBDA_HIGH);
    check_rate("zeta", zeta)?;
    check_rate("lambda-high", fixed_high)?;

    let jobs: Vec<(usize, f64)> = bs
        .iter()
        .flat_map(|&b| grid.iter().map(move |&l| (b, l)))
        .collect();
    let results: Vec<Vec<(&'static str, Cell)>> = jobs
        .par_iter()
        .map(|&(b, lambda)| match args.mode {
            SweepMode::Classless => {
                let r = QueueConfig::new(b, lambda, model.service)
                    .and_then(|c| solve_with(&c, &model.options))
                    .map(|s| s.mean_sojourn);
                vec![("all", Cell::from_result(r))]
            }
            SweepMode::Zeta => {
                let (h, l) = (zeta * lambda / (1.0 + zeta), lambda / (1.0 + zeta));
                ["H", "L"].into_iter().zip(two_class_cells(model, b, h, l)).collect()
            }
            SweepMode::FixedHigh => ["H", "L"]
                .into_iter()
                .zip(two_class_cells(model, b, fixed_high, lambda))
                .collect(),
        })
        .collect();

    let mut csv = String::from("lambda,b,class,mean_tct_s\n");
    let mut failure = None;
    for ((b, lambda), cells) in jobs.iter().zip(results) {
        for (class, cell) in cells {
            let value = match cell {
                Cell::Value(v) => v.to_string(),
                Cell::Unstable => "unstable".to_string(),
                Cell::Failed(e) => {
                    failure.get_or_insert(e);
                    "failed".to_string()
                }
            };
            writeln!(csv, "{lambda},{b},{class},{value}")?;
        }
    }
    emit(args.out.as_deref(), &csv)?;
    match failure {
        Some(e) => Err(e).context("a stable sweep point failed"),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub replications: Option<usize>,
    /// Confirmations discarded per replication before measuring.
    #[arg(long)]
    pub warmup: Option<usize>,
    /// Confirmations measured per replication.
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long, value_enum)]
    pub fill: Option<FillArg>,
}

impl SimArgs {
    fn config(&self, model: &Model, traffic: PriorityTraffic, default_seed: u64) -> Result<SimConfig> {
        let cfg = &model.config;
        let mut sc = SimConfig::new(traffic, or_config(self.seed, cfg, "seed")?.unwrap_or(default_seed));
        if let Some(n) = or_config(self.replications, cfg, "replications")? {
            sc = sc.with_replications(n);
        }
        if let Some(n) = or_config(self.warmup, cfg, "warmup")? {
            sc = sc.with_warmup(n);
        }
        if let Some(n) = or_config(self.horizon, cfg, "horizon")? {
            sc = sc.with_horizon(n);
        }
        let fill = match self.fill {
            Some(f) => Some(f),
            None => cfg.get_enum("fill")?,
        };
        if let Some(f) = fill {
            sc = sc.with_fill(f.into());
        }
        if sc.replications < 2 {
            return usage("--replications must be at least 2");
        }
        if sc.horizon == 0 {
            return usage("--horizon must be at least 1");
        }
        Ok(sc)
    }
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    /// Only the b=10 simulation cross-check.
    #[arg(long)]
    pub quick: bool,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Write the per-check report as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Table values the analysis must reproduce within this relative error.
const TABLE_TOLERANCE: f64 = 0.005;
/// Simulation cells allowed to miss the 95% interval.
const CI_MISS_BUDGET: usize = 1;

pub fn validate(model: &Model, args: &ValidateArgs) -> Result<()> {
    let mut text = String::new();
    let mut csv = String::from("check,b,lambda,class,analytic,reference,half_width,pass\n");
    let mut failed = 0usize;

    if !args.quick {
        let paper = ServiceDistribution::exponential(PAPER_BLOCK_RATE)?;
        let b = PAPER_BLOCK_CAPACITY;
        let f = solve_with(&QueueConfig::new(b, PAPER_LAMBDA_TOTAL, paper)?, &model.options)?
            .mean_sojourn;
        let (h, l) = two_class_times_with(PAPER_LAMBDA_HIGH, PAPER_LAMBDA_LOW, paper, b, &model.options)?;
        for (class, lambda, value, reference) in [
            ("all", PAPER_LAMBDA_TOTAL, f, 568.10),
            ("H", PAPER_LAMBDA_HIGH, h, 562.16),
            ("L", PAPER_LAMBDA_LOW, l, 647.05),
        ] {
            let gap = (value - reference).abs() / reference;
            let pass = gap <= TABLE_TOLERANCE;
            failed += usize::from(!pass);
            writeln!(
                text,
                "{} table b={b} lambda={lambda} class {class}: {value:.4} s vs {reference:.2} s ({:.3}%)",
                if pass { "PASS" } else { "FAIL" },
                100.0 * gap
            )?;
            writeln!(csv, "table,{b},{lambda},{class},{value},{reference},,{pass}")?;
        }
        let lhs = PAPER_LAMBDA_HIGH * h + PAPER_LAMBDA_LOW * l;
        let rhs = (PAPER_LAMBDA_HIGH + PAPER_LAMBDA_LOW) * f_at_sum(model, paper, b)?;
        let gap = (lhs - rhs).abs() / rhs;
        let pass = gap <= 1e-10;
        failed += usize::from(!pass);
        writeln!(
            text,
            "{} conservation: {lhs:.6} vs {rhs:.6} (relative gap {gap:e})",
            if pass { "PASS" } else { "FAIL" }
        )?;
        writeln!(csv, "conservation,{b},,,{lhs},{rhs},,{pass}")?;
    }

    let bs: &[usize] = if args.quick { &[10] } else { &[10, 50] };
    let mut misses = 0usize;
    let mut cells = 0usize;
    for &b in bs {
        for frac in [0.30, 0.60, 0.85] {
            let total = frac * b as f64 / model.service.mean();
            let traffic = PriorityTraffic::two_class_by_ratio(total, PAPER_ZETA, model.service, b)?;
            let sc = args.sim.config(model, traffic, 1)?;
            let report = sim::verify_against_analysis(&sc)?;
            for c in &report.classes {
                cells += 1;
                misses += usize::from(!c.analytic_inside_ci);
                let label = class_label(c.class - 1, 2);
                writeln!(
                    text,
                    "{} simulation b={b} load={frac} class {label}: analytic {:.4} s, simulated {:.4} +/- {:.4} s",
                    if c.analytic_inside_ci { "in  " } else { "out " },
                    c.analytic,
                    c.simulated,
                    c.half_width
                )?;
                writeln!(
                    csv,
                    "simulation,{b},{total},{label},{},{},{},{}",
                    c.analytic, c.simulated, c.half_width, c.analytic_inside_ci
                )?;
            }
        }
    }
    let pass = misses <= CI_MISS_BUDGET;
    failed += usize::from(!pass);
    writeln!(
        text,
        "{} simulation: {}/{cells} analytic values inside the 95% interval (at most {CI_MISS_BUDGET} miss allowed; {APPROXIMATION_LABEL})",
        if pass { "PASS" } else { "FAIL" },
        cells - misses
    )?;

    print!("{text}");
    if let Some(p) = &args.out {
        emit(Some(p), &csv)?;
    }
    if failed > 0 {
        return Err(ValidationFailed(failed).into());
    }
    Ok(())
}

fn f_at_sum(model: &Model, service: ServiceDistribution, b: usize) -> Result<f64> {
    let cfg = QueueConfig::new(b, PAPER_LAMBDA_HIGH + PAPER_LAMBDA_LOW, service)?;
    Ok(solve_with(&cfg, &model.options)?.mean_sojourn)
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    /// Per-class arrival rates, highest priority first.
    #[arg(long, value_delimiter = ',')]
    pub rates: Vec<f64>,
    /// Total rate; split into two classes when --zeta is given.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub zeta: Option<f64>,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Per-replication CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn estimate(model: &Model, args: &EstimateArgs) -> Result<()> {
    let cfg = &model.config;
    let b = model.capacity()?;
    let rates = if !args.rates.is_empty() {
        args.rates.clone()
    } else {
        let lambda = or_config(args.lambda, cfg, "lambda")?;
        let zeta = or_config(args.zeta, cfg, "zeta")?;
        match (lambda, zeta) {
            (Some(l), Some(z)) => {
                let (h, lo) = txconfirm_core::priority::split_by_ratio(l, z)
                    .map_err(|e| crate::config::UsageError(e.to_string()))?;
                vec![h, lo]
            }
            (Some(l), None) => vec![l],
            (None, _) if model.paper => vec![PAPER_LAMBDA_HIGH, PAPER_LAMBDA_LOW],
            (None, _) => return usage("give --rates or --lambda"),
        }
    };
    let traffic = PriorityTraffic::new(rates.clone(), model.service, b)
        .map_err(|e| crate::config::UsageError(e.to_string()))?;
    traffic.check_prefix_stability()?;
    let sc = args.sim.config(model, traffic, 1)?;
    let est = sim::estimate(&sc)?;

    let mut summary = String::new();
    writeln!(
        summary,
        "replications = {} ({} completed), seed = {}, fill = {:?}",
        sc.replications, est.successful, sc.seed, sc.fill
    )?;
    for (k, r) in rates.iter().enumerate() {
        writeln!(
            summary,
            "class {}: lambda = {r}, mean_tct_s = {:.4} +/- {:.4}",
            class_label(k, rates.len()),
            est.class_means[k],
            est.class_half_widths[k]
        )?;
    }
    writeln!(
        summary,
        "overall: mean_tct_s = {:.4} +/- {:.4}, idle_fraction = {:.6}",
        est.overall_mean, est.overall_half_width, est.idle_fraction
    )?;

    let mut buf = Vec::new();
    sim::write_replication_csv(&est, &mut buf)?;
    let csv = String::from_utf8(buf)?;
    match &args.out {
        Some(p) => {
            emit(Some(p), &csv)?;
            print!("{summary}");
        }
        None => {
            emit(None, &csv)?;
            eprint!("{summary}");
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub blocks: PathBuf,
    #[arg(long)]
    pub txs: PathBuf,
    /// Fee (BTC) at or above which a transaction is high priority.
    #[arg(long, default_value = "0.0001")]
    pub threshold: String,
    /// Observation span for arrival rates; defaults to the first-seen range.
    #[arg(long)]
    pub span_seconds: Option<f64>,
    #[arg(long, default_value_t = 86_400)]
    pub bucket_seconds: i64,
    /// Write summary.csv, classes.csv, fees.csv and timeseries.csv here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

pub fn stats(args: &StatsArgs) -> Result<()> {
    let threshold: Satoshi = args
        .threshold
        .parse()
        .map_err(|e: String| crate::config::UsageError(format!("--threshold: {e}")))?;
    let rule = ClassRule::new(threshold).map_err(|e| crate::config::UsageError(e.to_string()))?;
    let (blocks, txs) = chain::load(&args.blocks, &args.txs)?;
    for (path, errors) in [(&args.blocks, &blocks.errors), (&args.txs, &txs.errors)] {
        for e in errors {
            eprintln!("skipped {}: {e}", path.display());
        }
    }

    let gaps = chain::block_generation_times(&blocks.records);
    let counts: Vec<f64> = blocks.records.iter().map(|b| b.tx_count as f64).collect();
    let sizes: Vec<f64> = txs.records.iter().map(|t| t.size_bytes as f64).collect();
    let tcts: Vec<f64> = txs.records.iter().map(|t| t.confirmation_time() as f64).collect();
    let mut rows = Vec::new();
    for (name, values) in [
        ("block_generation_time_s", &gaps),
        ("block_tx_count", &counts),
        ("tx_size_bytes", &sizes),
        ("tct_s", &tcts),
    ] {
        match chain::summarize(values) {
            Ok(s) => rows.push((name, s)),
            Err(_) => eprintln!("no data for {name}"),
        }
    }
    if let Ok(fit) = fit_exponential(&gaps) {
        eprintln!("exponential fit of block generation time: rate = {:e} per s", fit.rate);
    }

    let span = match args.span_seconds {
        Some(s) => s,
        None => chain::observed_span(&txs.records).unwrap_or(1.0),
    };
    let classes = chain::classify_and_rates(&txs.records, rule, span)?;
    let series = chain::time_series(&txs.records, rule, args.bucket_seconds)?;

    let mut summary = Vec::new();
    chain::write_summary_csv(&rows, &mut summary)?;
    std::io::stdout().write_all(&summary)?;
    if let Some(dir) = &args.out_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut buf = Vec::new();
        chain::write_class_csv(&classes, &mut buf)?;
        fs::write(dir.join("classes.csv"), &buf)?;
        buf.clear();
        chain::write_fee_csv(&classes, &mut buf)?;
        fs::write(dir.join("fees.csv"), &buf)?;
        buf.clear();
        chain::write_time_series_csv(&series, &mut buf)?;
        fs::write(dir.join("timeseries.csv"), &buf)?;
        fs::write(dir.join("summary.csv"), &summary)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct MiningArgs {
    /// Number of miners.
    #[arg(long)]
    pub n: usize,
    /// Nonce-space size.
    #[arg(long)]
    pub m: f64,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Significance level for the reported KS critical value.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// CDF rows written to --out.
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    /// `x,empirical_cdf,exact_cdf,exponential_cdf` destination.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn mining(args: &MiningArgs) -> Result<()> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return usage("--alpha must lie in (0, 1)");
    }
    let cfg = MiningRaceConfig {
        miners: args.n,
        nonce_space: args.m,
        samples: args.samples,
        seed: args.seed,
    };
    cfg.validate().map_err(|e| crate::config::UsageError(e.to_string()))?;
    let sample = mining::simulate_race(&cfg)?;
    let mean = sample.iter().sum::<f64>() / sample.len() as f64;
    let mut text = String::new();
    writeln!(text, "miners = {}", cfg.miners)?;
    writeln!(text, "nonce_space = {}", cfg.nonce_space)?;
    writeln!(text, "samples = {}", cfg.samples)?;
    writeln!(text, "sample_mean = {mean}")?;
    writeln!(text, "exact_mean = {}", cfg.nonce_space / (cfg.miners as f64 + 1.0))?;
    writeln!(text, "limiting_rate = {}", cfg.limiting_rate())?;
    writeln!(
        text,
        "ks_exponential = {}",
        mining::ks_statistic(&sample, |x| cfg.exponential_cdf(x))
    )?;
    writeln!(text, "ks_exact = {}", mining::ks_statistic(&sample, |x| cfg.exact_cdf(x)))?;
    writeln!(
        text,
        "ks_critical_value = {} (alpha = {})",
        mining::ks_critical_value(cfg.samples, args.alpha),
        args.alpha
    )?;
    writeln!(
        text,
        "exact_sup_distance = {}",
        mining::exact_sup_distance(cfg.miners, cfg.nonce_space, 20_000)
    )?;
    print!("{text}");
    if let Some(p) = &args.out {
        let mut buf = Vec::new();
        mining::write_cdf_csv(&cfg, &sample, args.points, &mut buf)?;
        emit(Some(p), &String::from_utf8(buf)?)?;
    }
    Ok(())
}
