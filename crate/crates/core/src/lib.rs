//! Mean transaction-confirmation times for a blockchain modeled as a
//! batch-service priority queue.
//!
//! * [`service`] block-generation time laws and their transforms.
//! * [`batch`] the single-class analytic solver, `f(lambda) = E[T]`.
//! * [`priority`] per-class means by work-conservation decomposition.
//! * [`sim`] discrete-event simulator used to validate the analysis.
//! * [`mining`] the mining race whose minimum is asymptotically exponential.
//! * [`chain`] statistics over block/transaction CSV exports.

pub mod batch;
pub mod chain;
pub mod error;
pub mod linalg;
pub mod mining;
pub mod priority;
pub mod service;
pub mod sim;

pub use batch::{
    find_unit_disk_roots, mean_confirmation_time, pgf_evaluate, solve, solve_alpha,
    stability_check, AnalyticSolution, Precision, QueueConfig, SolverOptions, Stability,
};
pub use chain::{ChainError, ClassRule, Satoshi};
pub use error::AnalysisError;
pub use mining::MiningRaceConfig;
pub use priority::{class_confirmation_times, two_class_times, PriorityTraffic};
pub use service::{fit_exponential, ServiceDistribution, ServiceKind};
pub use sim::{estimate, run_replication, verify_against_analysis, SimConfig, SimEstimate};
