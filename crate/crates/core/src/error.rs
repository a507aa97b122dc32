use thiserror::Error;

/// Failures raised by the analytic solver, the priority decomposition and
/// the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("transform evaluated at its pole (s = {0})")]
    Pole(f64),

    #[error("unstable: offered load {offered_load} >= batch capacity {capacity}")]
    Unstable { offered_load: f64, capacity: usize },

    #[error(
        "class {class} is unstable: cumulative offered load {offered_load} >= batch capacity {capacity}"
    )]
    UnstableClass {
        /// 1-based priority class index.
        class: usize,
        offered_load: f64,
        capacity: usize,
    },

    #[error("root finder did not converge after {iterations} iterations (worst residual {worst_residual:e})")]
    NonConvergence {
        iterations: usize,
        worst_residual: f64,
    },

    #[error("numerically degenerate roots: pairwise distance {distance:e}")]
    RootCollision { distance: f64 },

    #[error(
        "boundary-rate system is ill-conditioned (residual {residual:e}); retry with extended precision"
    )]
    IllConditioned { residual: f64 },

    #[error("generating function evaluated at a pole (z = {re} + {im}i)")]
    PgfPole { re: f64, im: f64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("only {successful} replications completed; at least 2 are required")]
    TooFewReplications { successful: usize },
}

pub type Result<T, E = AnalysisError> = std::result::Result<T, E>;
