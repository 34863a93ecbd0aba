//! Dynamic chance-constrained knapsack benchmark.
//!
//! Items carry integer profits and uncertain weights drawn uniformly from
//! `[E(w) - delta, E(w) + delta]`; the knapsack capacity moves every `tau`
//! iterations. The crate provides
//!
//! * [`model`]: instances, generation, the instance file format and solution
//!   aggregates maintained incrementally under bit flips;
//! * [`chance`]: one-sided Chebyshev and Chernoff violation probabilities,
//!   their capacity bounds `C*(x)` and a Monte-Carlo estimator;
//! * [`dynamics`]: seed-reproducible capacity schedules;
//! * [`oracle`]: the exact DP table and brute-force references;
//! * [`solvers`]: (1+1)-EA, POSDC and NSGA-II plus the run driver;
//! * [`metrics`]: per-iteration offline error and its mean;
//! * [`stats`]: Kruskal-Wallis and Dunn/Bonferroni pairwise labels;
//! * [`campaign`]: parameter grids, seeding, parallel execution and CSV output.
//!
//! Floating-point code is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below fix the scalar to `f64`, which is what the campaign
//! runner uses.

pub mod campaign;
pub mod chance;
pub mod dynamics;
mod error;
pub mod metrics;
pub mod model;
pub mod oracle;
mod scalar;
pub mod solvers;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use chance::BoundKind;
pub use dynamics::CapacitySchedule;
pub use model::{Instance, InstanceKind, Item, Solution};
pub use oracle::DpTable;
pub use solvers::Algorithm;

pub type ChanceParams64 = chance::ChanceParams<f64>;
pub type ChanceParams32 = chance::ChanceParams<f32>;
pub type LexFitness64 = solvers::LexFitness<f64>;
pub type PosdcState64 = solvers::PosdcState<f64>;
pub type Nsga2State64 = solvers::Nsga2State<f64>;
pub type RunRecord64 = metrics::RunRecord<f64>;
pub type RunRecord32 = metrics::RunRecord<f32>;
