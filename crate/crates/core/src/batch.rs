//! Single-class batch-service queue with an accessible batch.
//!
//! Transactions arrive as a Poisson stream with rate `lambda`. A service
//! (block) starts when a transaction finds the system idle; arrivals during
//! a service join it until it holds `b` transactions. A completion removes
//! `min(N, b)` transactions and, if any remain, the next service starts at
//! once.
//!
//! The stationary queue-length pgf is pinned down by the `b` boundary rates
//! `alpha_k` (rate of completions that find exactly `k` in system). They
//! solve a `b x b` linear system built from the `b - 1` roots of
//! `z^b = G*(lambda - lambda z)` inside the unit disk plus a normalization
//! row. The mean sojourn time then follows in closed form.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{AnalysisError, Result};
use crate::linalg::{solve_dense, DoubleDouble, Scalar};
use crate::service::{ServiceDistribution, ServiceKind};

/// Root iteration cap for the fixed-point map.
pub const ROOT_MAX_ITERATIONS: usize = 10_000;
/// Fixed-point convergence threshold on `|z_{n+1} - z_n|`.
pub const ROOT_STEP_TOLERANCE: f64 = 1e-14;
/// Maximum accepted `|z^b - G*(lambda - lambda z)|` per root.
pub const ROOT_RESIDUAL_TOLERANCE: f64 = 1e-10;
/// Minimum pairwise distance between distinct roots.
pub const ROOT_SEPARATION: f64 = 1e-9;
/// Maximum accepted normwise backward error of the boundary-rate solve.
pub const SYSTEM_RESIDUAL_TOLERANCE: f64 = 1e-8;
/// Imaginary or negative round-off tolerated (and clamped) in `alpha`.
pub const ALPHA_CLAMP_TOLERANCE: f64 = 1e-8;
/// Batch sizes above which [`Precision::Auto`] retries in extended precision.
pub const EXTENDED_PRECISION_THRESHOLD: usize = 2048;

/// Batch capacity `b`, arrival rate and service law of one queue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueConfig {
    capacity: usize,
    arrival_rate: f64,
    service: ServiceDistribution,
}

impl QueueConfig {
    pub fn new(capacity: usize, arrival_rate: f64, service: ServiceDistribution) -> Result<Self> {
        if capacity == 0 {
            return Err(AnalysisError::InvalidParameter(
                "batch capacity b must be at least 1".into(),
            ));
        }
        if !(arrival_rate.is_finite() && arrival_rate > 0.0) {
            return Err(AnalysisError::InvalidParameter(format!(
                "arrival rate must be finite and positive, got {arrival_rate}"
            )));
        }
        Ok(Self {
            capacity,
            arrival_rate,
            service,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn arrival_rate(&self) -> f64 {
        self.arrival_rate
    }

    pub fn service(&self) -> &ServiceDistribution {
        &self.service
    }

    /// `lambda * E[S]`, the mean number of arrivals per block interval.
    pub fn offered_load(&self) -> f64 {
        self.arrival_rate * self.service.mean()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stability {
    pub stable: bool,
    pub offered_load: f64,
}

/// Stable iff `lambda * E[S] < b`; the boundary itself is unstable.
pub fn stability_check(cfg: &QueueConfig) -> Stability {
    let offered_load = cfg.offered_load();
    Stability {
        stable: offered_load < cfg.capacity as f64,
        offered_load,
    }
}

fn require_stable(cfg: &QueueConfig) -> Result<()> {
    let s = stability_check(cfg);
    if s.stable {
        Ok(())
    } else {
        Err(AnalysisError::Unstable {
            offered_load: s.offered_load,
            capacity: cfg.capacity,
        })
    }
}

/// Working precision of the boundary-rate solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    #[default]
    Double,
    /// Double-double arithmetic for building and factoring the system.
    Extended,
    /// Double first; retry in extended precision when the residual check
    /// fails and `b` exceeds [`EXTENDED_PRECISION_THRESHOLD`].
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolverOptions {
    pub precision: Precision,
}

/// Everything the solver learned about one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticSolution {
    pub config: QueueConfig,
    /// The `b - 1` roots inside the unit disk, ordered by argument then modulus.
    pub roots: Vec<Complex64>,
    /// `alpha_1 ..= alpha_b`.
    pub alpha: Vec<f64>,
    /// Idle probability `P_0`.
    pub p0: f64,
    /// `E[N]`.
    pub mean_queue: f64,
    /// `E[T]` in seconds.
    pub mean_sojourn: f64,
    /// Worst root residual `|z^b - G*(lambda - lambda z)|`.
    pub residual: f64,
    /// Normwise backward error of the boundary-rate solve.
    pub system_residual: f64,
    pub precision_used: Precision,
}

/// Result of [`solve_alpha`].
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryRates {
    pub alpha: Vec<f64>,
    pub p0: f64,
    pub system_residual: f64,
    pub precision_used: Precision,
}

/// `(G*(s))^{1/b}` on the branch continuous in `s`.
#[inline]
fn lst_root(service: &ServiceDistribution, s: Complex64, b: f64) -> Result<Complex64> {
    Ok((service.lst_log(s)? / b).exp())
}

/// `z^b - G*(lambda - lambda z)` for a generic service law.
fn characteristic(cfg: &QueueConfig, z: Complex64) -> Result<Complex64> {
    let lam = cfg.arrival_rate;
    Ok(z.powu(cfg.capacity as u32) - cfg.service.lst(lam - lam * z)?)
}

fn root_residual(cfg: &QueueConfig, z: Complex64) -> f64 {
    characteristic(cfg, z).map(|r| r.norm()).unwrap_or(f64::INFINITY)
}

/// One Newton step. Exponential service uses the trinomial
/// `lambda z^{b+1} - (lambda + mu) z^b + mu`; other kinds use the
/// transcendental characteristic function directly.
fn newton_step(cfg: &QueueConfig, z: Complex64) -> Result<Complex64> {
    let b = cfg.capacity as u32;
    let lam = cfg.arrival_rate;
    let (f, df) = match cfg.service.kind() {
        ServiceKind::Exponential { rate: mu } => {
            let zb1 = z.powu(b - 1);
            let zb = zb1 * z;
            (
                lam * zb * z - (lam + mu) * zb + mu,
                (b as f64 + 1.0) * lam * zb - (lam + mu) * b as f64 * zb1,
            )
        }
        _ => {
            let s = lam - lam * z;
            let zb1 = z.powu(b - 1);
            (
                zb1 * z - cfg.service.lst(s)?,
                b as f64 * zb1 + lam * cfg.service.lst_derivative(s)?,
            )
        }
    };
    if df.norm() == 0.0 {
        return Ok(z);
    }
    Ok(z - f / df)
}

/// Fixed point `z <- w_m (G*(lambda - lambda z))^{1/b}` for branch `m`
/// (`w_m = exp(2 pi i m / b)`),
/// followed by Newton polishing. Returns the root and its iteration count.
fn root_for_branch(cfg: &QueueConfig, m: usize) -> Result<(Complex64, usize, f64)> {
    let b = cfg.capacity;
    let bf = b as f64;
    let lam = cfg.arrival_rate;
    let is_real_branch = 2 * m == b;
    let w = if is_real_branch {
        Complex64::new(-1.0, 0.0)
    } else {
        Complex64::from_polar(1.0, 2.0 * PI * m as f64 / bf)
    };

    let mut z = w * lst_root(&cfg.service, Complex64::from(lam), bf)?;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < ROOT_MAX_ITERATIONS {
        iterations += 1;
        let next = w * lst_root(&cfg.service, lam - lam * z, bf)?;
        let step = (next - z).norm();
        z = next;
        if is_real_branch {
            z.im = 0.0;
        }
        if step <= ROOT_STEP_TOLERANCE {
            converged = true;
            break;
        }
    }

    let mut residual = root_residual(cfg, z);
    for _ in 0..4 {
        let mut candidate = newton_step(cfg, z)?;
        if is_real_branch {
            candidate.im = 0.0;
        }
        let r = root_residual(cfg, candidate);
        if r < residual && (candidate - z).norm() < 1e-6 {
            z = candidate;
            residual = r;
        } else {
            break;
        }
    }
    if !converged && residual > ROOT_RESIDUAL_TOLERANCE {
        return Err(AnalysisError::NonConvergence {
            iterations,
            worst_residual: residual,
        });
    }
    Ok((z, iterations, residual))
}

/// Roots indexed by branch `m = 1..b`; used internally because the real
/// formulation of the linear system needs the conjugate pairing.
fn roots_by_branch(cfg: &QueueConfig) -> Result<(Vec<Complex64>, f64)> {
    require_stable(cfg)?;
    let b = cfg.capacity;
    if b == 1 {
        return Ok((Vec::new(), 0.0));
    }
    let results: Vec<Result<(Complex64, usize, f64)>> = if b > 64 {
        (1..b).into_par_iter().map(|m| root_for_branch(cfg, m)).collect()
    } else {
        (1..b).map(|m| root_for_branch(cfg, m)).collect()
    };

    let mut roots = Vec::with_capacity(b - 1);
    let mut worst = 0.0f64;
    let mut max_iterations = 0;
    let mut failure: Option<f64> = None;
    for r in results {
        match r {
            Ok((z, it, res)) => {
                worst = worst.max(res);
                max_iterations = max_iterations.max(it);
                roots.push(z);
            }
            Err(AnalysisError::NonConvergence { worst_residual, .. }) => {
                failure = Some(failure.unwrap_or(0.0).max(worst_residual));
            }
            Err(e) => return Err(e),
        }
    }
    if let Some(worst_residual) = failure {
        return Err(AnalysisError::NonConvergence {
            iterations: ROOT_MAX_ITERATIONS,
            worst_residual: worst_residual.max(worst),
        });
    }
    if worst > ROOT_RESIDUAL_TOLERANCE || roots.iter().any(|z| z.norm() >= 1.0) {
        return Err(AnalysisError::NonConvergence {
            iterations: max_iterations,
            worst_residual: worst,
        });
    }
    check_separation(&roots)?;
    Ok((roots, worst))
}

fn check_separation(roots: &[Complex64]) -> Result<()> {
    let closest = roots
        .par_iter()
        .enumerate()
        .map(|(i, a)| {
            roots[i + 1..]
                .iter()
                .map(|c| (a - c).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min);
    if closest <= ROOT_SEPARATION {
        return Err(AnalysisError::RootCollision { distance: closest });
    }
    Ok(())
}

fn sort_roots(roots: &mut [Complex64]) {
    roots.sort_by(|a, b| {
        a.arg()
            .total_cmp(&b.arg())
            .then_with(|| a.norm().total_cmp(&b.norm()))
    });
}

/// The `b - 1` roots of `z^b = G*(lambda - lambda z)` with `|z| < 1`,
/// excluding `z = 1`, ordered by increasing principal argument (ties by
/// modulus).
pub fn find_unit_disk_roots(cfg: &QueueConfig) -> Result<Vec<Complex64>> {
    let (mut roots, _) = roots_by_branch(cfg)?;
    sort_roots(&mut roots);
    Ok(roots)
}

/// Coefficient of `alpha_k` in the normalization row.
fn normalization_coefficient(cfg: &QueueConfig, k: usize) -> f64 {
    let b = cfg.capacity as f64;
    let es = cfg.service.mean();
    let lam = cfg.arrival_rate;
    (b + 1.0 - k as f64) * es / (b - lam * es) + 1.0 / lam
}

/// Tolerance for treating a root as lying on the real axis.
fn is_real_root(z: Complex64) -> bool {
    z.im.abs() <= 1e-12 * z.norm().max(1e-300)
}

#[derive(Clone, Copy, Debug)]
struct ComplexDd {
    re: DoubleDouble,
    im: DoubleDouble,
}

impl ComplexDd {
    fn from_c64(z: Complex64) -> Self {
        Self {
            re: DoubleDouble::new(z.re),
            im: DoubleDouble::new(z.im),
        }
    }
    fn mul(self, o: Self) -> Self {
        Self {
            re: self.re * o.re - self.im * o.im,
            im: self.re * o.im + self.im * o.re,
        }
    }
}

/// Rows `z^{b+1} - z^k`, `k = 1..=b`, as (real part, imaginary part), in
/// the requested precision.
trait RowBuilder: Scalar {
    fn root_row(z: Complex64, b: usize) -> (Vec<Self>, Vec<Self>);
}

impl RowBuilder for f64 {
    fn root_row(z: Complex64, b: usize) -> (Vec<f64>, Vec<f64>) {
        let mut powers = Vec::with_capacity(b + 1);
        let mut p = z;
        for _ in 0..=b {
            powers.push(p);
            p *= z;
        }
        let top = powers[b];
        powers[..b]
            .iter()
            .map(|pk| {
                let c = top - pk;
                (c.re, c.im)
            })
            .unzip()
    }
}

impl RowBuilder for DoubleDouble {
    fn root_row(z: Complex64, b: usize) -> (Vec<DoubleDouble>, Vec<DoubleDouble>) {
        let zz = ComplexDd::from_c64(z);
        let mut powers = Vec::with_capacity(b + 1);
        let mut p = zz;
        for _ in 0..=b {
            powers.push(p);
            p = p.mul(zz);
        }
        let top = powers[b];
        powers[..b]
            .iter()
            .map(|pk| (top.re - pk.re, top.im - pk.im))
            .unzip()
    }
}

/// Real `b x b` system: each root off the real axis contributes the real
/// and imaginary parts of its equation (its conjugate adds nothing new),
/// real roots contribute one row, and the last row is the normalization.
fn solve_real_system<T: RowBuilder>(cfg: &QueueConfig, roots: &[Complex64]) -> Result<Vec<f64>> {
    let b = cfg.capacity;
    let upper: Vec<Complex64> = roots.iter().copied().filter(|z| !is_real_root(*z) && z.im > 0.0).collect();
    let real: Vec<Complex64> = roots.iter().copied().filter(|z| is_real_root(*z)).collect();
    if 2 * upper.len() + real.len() != b - 1 {
        return Err(AnalysisError::InvalidParameter(
            "root list is not closed under conjugation".into(),
        ));
    }

    let mut a: Vec<T> = Vec::with_capacity(b * b);
    for z in &upper {
        let (re, im) = T::root_row(*z, b);
        a.extend(re);
        a.extend(im);
    }
    for z in &real {
        let (re, _) = T::root_row(Complex64::new(z.re, 0.0), b);
        a.extend(re);
    }
    a.extend((1..=b).map(|k| T::from_f64(normalization_coefficient(cfg, k))));
    let mut rhs = vec![T::zero(); b];
    rhs[b - 1] = T::from_f64(1.0);

    let x = solve_dense(a, rhs, b).map_err(|_| AnalysisError::IllConditioned {
        residual: f64::INFINITY,
    })?;
    Ok(x.into_iter().map(Scalar::to_f64).collect())
}

/// Normwise backward error of `alpha` against the full complex system (all
/// roots, conjugates included) and the normalization row.
fn system_backward_error(cfg: &QueueConfig, roots: &[Complex64], alpha: &[f64]) -> f64 {
    let b = cfg.capacity;
    let alpha_norm = alpha.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let row_stats = |z: &Complex64| -> (f64, f64) {
        let mut p = *z;
        let mut powers = Vec::with_capacity(b + 1);
        for _ in 0..=b {
            powers.push(p);
            p *= z;
        }
        let top = powers[b];
        let mut acc = Complex64::new(0.0, 0.0);
        let mut row_norm = 0.0;
        for (k, pk) in powers[..b].iter().enumerate() {
            let c = top - pk;
            acc += c * alpha[k];
            row_norm += c.norm();
        }
        (acc.norm(), row_norm)
    };
    let (mut worst_r, mut worst_a) = roots
        .par_iter()
        .map(row_stats)
        .reduce(|| (0.0, 0.0), |x, y| (x.0.max(y.0), x.1.max(y.1)));

    let mut norm_row = 0.0;
    let mut norm_acc = 0.0;
    for k in 1..=b {
        let c = normalization_coefficient(cfg, k);
        norm_acc += c * alpha[k - 1];
        norm_row += c.abs();
    }
    worst_r = worst_r.max((norm_acc - 1.0).abs());
    worst_a = worst_a.max(norm_row);
    worst_r / (worst_a * alpha_norm + 1.0)
}

fn clamp_alpha(mut alpha: Vec<f64>) -> Result<Vec<f64>> {
    let scale = alpha.iter().fold(1.0f64, |m, a| m.max(a.abs()));
    for a in alpha.iter_mut() {
        if *a < 0.0 {
            if -*a <= ALPHA_CLAMP_TOLERANCE * scale {
                *a = 0.0;
            } else {
                return Err(AnalysisError::IllConditioned { residual: -*a });
            }
        }
    }
    Ok(alpha)
}

/// `alpha_1 = lambda (1 - lambda E[S])` when `b = 1`.
fn single_slot_alpha(cfg: &QueueConfig) -> Vec<f64> {
    let lam = cfg.arrival_rate;
    vec![lam * (1.0 - lam * cfg.service.mean())]
}

/// Solves for the boundary rates given the unit-disk roots of `cfg`.
pub fn solve_alpha(cfg: &QueueConfig, roots: &[Complex64]) -> Result<BoundaryRates> {
    solve_alpha_with(cfg, roots, &SolverOptions::default())
}

pub fn solve_alpha_with(
    cfg: &QueueConfig,
    roots: &[Complex64],
    opts: &SolverOptions,
) -> Result<BoundaryRates> {
    require_stable(cfg)?;
    let b = cfg.capacity;
    if roots.len() != b - 1 {
        return Err(AnalysisError::InvalidParameter(format!(
            "expected {} roots, got {}",
            b - 1,
            roots.len()
        )));
    }
    let lam = cfg.arrival_rate;
    if b == 1 {
        let alpha = single_slot_alpha(cfg);
        let p0 = alpha[0] / lam;
        return Ok(BoundaryRates {
            alpha,
            p0,
            system_residual: 0.0,
            precision_used: Precision::Double,
        });
    }

    let attempt = |precision: Precision| -> Result<(Vec<f64>, f64)> {
        let raw = match precision {
            Precision::Extended => solve_real_system::<DoubleDouble>(cfg, roots)?,
            _ => solve_real_system::<f64>(cfg, roots)?,
        };
        let residual = system_backward_error(cfg, roots, &raw);
        if residual.is_nan() || residual > SYSTEM_RESIDUAL_TOLERANCE {
            return Err(AnalysisError::IllConditioned { residual });
        }
        Ok((clamp_alpha(raw)?, residual))
    };

    let (alpha, system_residual, precision_used) = match opts.precision {
        Precision::Double => {
            let (a, r) = attempt(Precision::Double)?;
            (a, r, Precision::Double)
        }
        Precision::Extended => {
            let (a, r) = attempt(Precision::Extended)?;
            (a, r, Precision::Extended)
        }
        Precision::Auto => match attempt(Precision::Double) {
            Ok((a, r)) => (a, r, Precision::Double),
            Err(AnalysisError::IllConditioned { .. }) if b > EXTENDED_PRECISION_THRESHOLD => {
                let (a, r) = attempt(Precision::Extended)?;
                (a, r, Precision::Extended)
            }
            Err(e) => return Err(e),
        },
    };
    let p0 = alpha.iter().sum::<f64>() / lam;
    Ok(BoundaryRates {
        alpha,
        p0,
        system_residual,
        precision_used,
    })
}

/// Mean number in system from the closed-form derivative of the pgf at 1.
fn mean_queue_from_alpha(cfg: &QueueConfig, alpha: &[f64]) -> f64 {
    let b = cfg.capacity as f64;
    let lam = cfg.arrival_rate;
    let es = cfg.service.mean();
    let es2 = cfg.service.second_moment();
    let weighted: f64 = alpha
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let k = (i + 1) as f64;
            a * (b * (b - 1.0)
                + ((b + 1.0) * b - k * (k - 1.0)) * lam * es
                + (b - k) * lam * lam * es2)
        })
        .sum();
    (weighted - lam * (b * (b - 1.0) - lam * lam * es2)) / (2.0 * lam * (b - lam * es))
}

/// Full solve with default options.
pub fn solve(cfg: &QueueConfig) -> Result<AnalyticSolution> {
    solve_with(cfg, &SolverOptions::default())
}

pub fn solve_with(cfg: &QueueConfig, opts: &SolverOptions) -> Result<AnalyticSolution> {
    let (mut roots, residual) = roots_by_branch(cfg)?;
    let rates = solve_alpha_with(cfg, &roots, opts)?;
    sort_roots(&mut roots);
    let mean_queue = mean_queue_from_alpha(cfg, &rates.alpha);
    let mean_sojourn = mean_queue / cfg.arrival_rate;
    Ok(AnalyticSolution {
        config: *cfg,
        roots,
        alpha: rates.alpha,
        p0: rates.p0,
        mean_queue,
        mean_sojourn,
        residual,
        system_residual: rates.system_residual,
        precision_used: rates.precision_used,
    })
}

/// `f(lambda) = E[T]`, the mean transaction-confirmation time in seconds.
pub fn mean_confirmation_time(cfg: &QueueConfig) -> Result<f64> {
    solve(cfg).map(|s| s.mean_sojourn)
}

/// Stationary queue-length pgf `P(z)`; solves `cfg` first.
pub fn pgf_evaluate(cfg: &QueueConfig, z: Complex64) -> Result<Complex64> {
    solve(cfg)?.pgf(z)
}

impl AnalyticSolution {
    /// `E[N] = lambda E[T]`.
    pub fn mean_number_in_system(&self) -> f64 {
        self.mean_queue
    }

    /// Evaluates `P(z)`. `z = 1` returns the analytic limit 1; the other
    /// zeros of `z^b - G*(lambda - lambda z)` are rejected as poles.
    pub fn pgf(&self, z: Complex64) -> Result<Complex64> {
        let cfg = &self.config;
        let lam = cfg.arrival_rate;
        let b = cfg.capacity as u32;
        let p0 = Complex64::from(self.p0);
        if z == Complex64::new(1.0, 0.0) {
            return Ok(Complex64::new(1.0, 0.0));
        }
        let pole = || AnalysisError::PgfPole { re: z.re, im: z.im };
        let s = lam - lam * z;
        let g = cfg.service.lst(s).map_err(|_| pole())?;
        let zb = z.powu(b);
        let denom = zb - g;
        if denom.norm() <= 1e-13 * (1.0 + zb.norm()) {
            return Err(pole());
        }
        let mut numer = Complex64::new(0.0, 0.0);
        let mut zk = z;
        let zb1 = zb * z;
        for a in &self.alpha {
            numer += (zb1 - zk) * *a;
            zk *= z;
        }
        Ok(p0 + numer / denom * (1.0 - g) / s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_cfg(b: usize, lam: f64, mu: f64) -> QueueConfig {
        QueueConfig::new(b, lam, ServiceDistribution::exponential(mu).unwrap()).unwrap()
    }

    const GOLDEN_ROOT: f64 = -0.618_033_988_749_894_8; // (1 - sqrt 5)/2

    #[test]
    fn config_validation() {
        let s = ServiceDistribution::exponential(1.0).unwrap();
        assert!(QueueConfig::new(0, 1.0, s).is_err());
        assert!(QueueConfig::new(1, 0.0, s).is_err());
        assert!(QueueConfig::new(1, -1.0, s).is_err());
    }

    #[test]
    fn stability_examples() {
        let s = stability_check(&QueueConfig::new(1750, 0.97275, ServiceDistribution::exponential(1.8379e-3).unwrap()).unwrap());
        assert!(s.stable);
        assert!((s.offered_load - 529.27).abs() < 0.01);

        let tiny = stability_check(&exp_cfg(3, 1e-300, 1.0));
        assert!(tiny.stable && tiny.offered_load < 1e-299);

        let edge = stability_check(&exp_cfg(2, 2.0, 1.0));
        assert!(!edge.stable);
        assert_eq!(edge.offered_load, 2.0);
    }

    #[test]
    fn unstable_config_is_rejected() {
        assert!(matches!(
            solve(&exp_cfg(2, 2.5, 1.0)),
            Err(AnalysisError::Unstable { capacity: 2, .. })
        ));
        assert!(find_unit_disk_roots(&exp_cfg(2, 2.0, 1.0)).is_err());
    }

    #[test]
    fn golden_ratio_root() {
        let roots = find_unit_disk_roots(&exp_cfg(2, 1.0, 1.0)).unwrap();
        assert_eq!(roots.len(), 1);
        assert!((roots[0].re - GOLDEN_ROOT).abs() < 1e-12);
        assert_eq!(roots[0].im, 0.0);
    }

    #[test]
    fn sqrt_three_root() {
        let roots = find_unit_disk_roots(&exp_cfg(2, 1.0, 2.0)).unwrap();
        assert_eq!(roots.len(), 1);
        assert!((roots[0].re - (1.0 - 3f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn single_slot_has_no_roots() {
        assert!(find_unit_disk_roots(&exp_cfg(1, 0.5, 1.0)).unwrap().is_empty());
        assert!(find_unit_disk_roots(&QueueConfig::new(1, 0.3, ServiceDistribution::deterministic(2.0).unwrap()).unwrap())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn golden_ratio_alpha_and_sojourn() {
        let cfg = exp_cfg(2, 1.0, 1.0);
        let sol = solve(&cfg).unwrap();
        // (z+1) a1 + z a2 = 0 and 3 a1 + 2 a2 = 1 with z = (1 - sqrt 5)/2
        let z = GOLDEN_ROOT;
        let a1 = -z / (2.0 * (z + 1.0) - 3.0 * z);
        let a2 = (1.0 - 3.0 * a1) / 2.0;
        assert!((sol.alpha[0] - a1).abs() < 1e-12);
        assert!((sol.alpha[1] - a2).abs() < 1e-12);
        assert!((sol.alpha[0] - 0.236_068_0).abs() < 1e-7);
        assert!((sol.alpha[1] - 0.145_898_0).abs() < 1e-7);
        assert!((sol.p0 - 0.381_966_0).abs() < 1e-7);
        assert!((sol.mean_sojourn - 1.618_034_0).abs() < 1e-6);
    }

    #[test]
    fn single_slot_matches_mm1() {
        let cfg = exp_cfg(1, 0.5, 1.0);
        let sol = solve(&cfg).unwrap();
        assert_eq!(sol.alpha, vec![0.25]);
        assert_eq!(sol.p0, 0.5);
        assert!((sol.mean_sojourn - 2.0).abs() < 1e-15);
    }

    #[test]
    fn alpha_sum_equals_lambda_p0() {
        for cfg in [exp_cfg(5, 3.0, 1.0), exp_cfg(17, 1.0, 0.1), exp_cfg(40, 30.0, 1.0)] {
            let sol = solve(&cfg).unwrap();
            let sum: f64 = sol.alpha.iter().sum();
            assert!((sum - cfg.arrival_rate * sol.p0).abs() <= 1e-8 * sum);
            assert!(sol.p0 > 0.0 && sol.p0 < 1.0);
            assert!(sol.alpha.iter().all(|a| *a >= 0.0));
            assert!(sol.mean_sojourn >= cfg.service().mean());
            assert_eq!(sol.mean_queue, cfg.arrival_rate() * sol.mean_sojourn);
        }
    }

    #[test]
    fn roots_inside_disk_and_ordered() {
        let cfg = QueueConfig::new(12, 7.0, ServiceDistribution::erlang(2, 2.0).unwrap()).unwrap();
        let roots = find_unit_disk_roots(&cfg).unwrap();
        assert_eq!(roots.len(), 11);
        for w in roots.windows(2) {
            assert!(w[0].arg() <= w[1].arg());
        }
        for z in &roots {
            assert!(z.norm() < 1.0);
            assert!(root_residual(&cfg, *z) <= ROOT_RESIDUAL_TOLERANCE);
        }
    }

    #[test]
    fn extended_precision_agrees_with_double() {
        let cfg = exp_cfg(50, 40.0, 1.0);
        let d = solve(&cfg).unwrap();
        let e = solve_with(&cfg, &SolverOptions { precision: Precision::Extended }).unwrap();
        assert_eq!(e.precision_used, Precision::Extended);
        assert!((d.mean_sojourn - e.mean_sojourn).abs() < 1e-10 * d.mean_sojourn);
    }

    #[test]
    fn extended_precision_recovers_ill_conditioned_case() {
        // Deterministic service with lambda d = 20, b = 30: the boundary
        // system has condition ~1e12. Reference from a 50-digit mpmath solve.
        const REFERENCE: f64 = 0.525_984_288_121_227_6;
        let cfg = QueueConfig::new(30, 20.0, ServiceDistribution::deterministic(1.0).unwrap()).unwrap();
        let d = solve(&cfg).unwrap();
        let e = solve_with(&cfg, &SolverOptions { precision: Precision::Extended }).unwrap();
        assert!((e.mean_sojourn - REFERENCE).abs() < 1e-12 * REFERENCE);
        assert!((d.mean_sojourn - REFERENCE).abs() < 1e-7 * REFERENCE);
        // Joining an in-progress deterministic block waits only its residual.
        assert!(e.mean_sojourn < cfg.service().mean());
    }

    #[test]
    fn pgf_boundary_values() {
        let sol = solve(&exp_cfg(6, 4.0, 1.0)).unwrap();
        assert_eq!(sol.pgf(Complex64::new(1.0, 0.0)).unwrap(), Complex64::new(1.0, 0.0));
        let at0 = sol.pgf(Complex64::new(0.0, 0.0)).unwrap();
        assert!((at0.re - sol.p0).abs() < 1e-9 && at0.im.abs() < 1e-12);
        let near1 = sol.pgf(Complex64::new(1.0 - 1e-7, 0.0)).unwrap();
        assert!((near1.re - 1.0).abs() < 1e-5);
    }

    #[test]
    fn pgf_rejects_roots_as_poles() {
        let sol = solve(&exp_cfg(4, 2.0, 1.0)).unwrap();
        let z = sol.roots[1];
        assert!(matches!(sol.pgf(z), Err(AnalysisError::PgfPole { .. })));
    }

    #[test]
    fn pgf_derivative_is_mean_queue() {
        for sol in [solve(&exp_cfg(2, 1.0, 1.0)).unwrap(), solve(&exp_cfg(8, 5.0, 1.0)).unwrap()] {
            let h = 1e-5;
            let d = (sol.pgf(Complex64::from(1.0 + h)).unwrap()
                - sol.pgf(Complex64::from(1.0 - h)).unwrap())
                / (2.0 * h);
            assert!(((d.re - sol.mean_queue) / sol.mean_queue).abs() < 1e-4);
        }
    }

    #[test]
    fn pgf_is_probability_generating() {
        // P(z) on [0,1] must be increasing and convex with P(0) = p0.
        let sol = solve(&exp_cfg(5, 3.5, 1.0)).unwrap();
        let vals: Vec<f64> = (0..=20)
            .map(|i| sol.pgf(Complex64::from(i as f64 / 20.0)).unwrap().re)
            .collect();
        for w in vals.windows(3) {
            assert!(w[0] <= w[1] && w[1] <= w[2]);
            assert!(w[0] + w[2] - 2.0 * w[1] >= -1e-10);
        }
    }
}
