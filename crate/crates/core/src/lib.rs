//! Strategy schedule construction for solver portfolios.
//!
//! Given recorded evaluation data (which strategy solved which problem, and
//! how fast), this crate builds time-sliced schedules under a total time
//! budget and provides the machinery around that task:
//!
//! - [`model`]: the shared data model — evaluation matrices, observation
//!   multisets, success-probability estimation, schedules and their
//!   simulation.
//! - [`greedy`]: greedy schedule construction with slice extension,
//!   regularizations (slack, reward exponent, diminishing rewards),
//!   budget-less journals with replay, and a probabilistic variant for
//!   nondeterministic solvers.
//! - [`exact`]: an integer-programming model of the schedule construction
//!   problem, LP-file export, and an exact branch-and-bound solver for small
//!   instances.
//! - [`baselines`]: reference constructors (step-quantized greedy, uniform
//!   buckets) and cumulative performance curves.
//! - [`dist`]: strategy-sampling distributions derived from evaluation data,
//!   Luby limit sequences, and randomized problem sampling.
//! - [`harness`]: train/test splits, k-fold cross-validation with witness
//!   hygiene, and summary statistics.
//!
//! All time quantities are integer megainstructions (Mi); see [`model::Mi`].

pub mod baselines;
pub mod dist;
pub mod exact;
pub mod greedy;
pub mod harness;
pub mod model;
