//! Scale-free UCB for bandits with bounded kurtosis.
//!
//! The policy needs only an upper bound on the kurtosis of every arm; its
//! actions are unchanged when all rewards are replaced by `a·X + b` with
//! `a > 0`. Alongside it sit median-of-means estimators, simulation tooling
//! and a lab of exact finite-support measures for the KL lower bound.

// `!(x > 0.0)` style guards are deliberate: NaN must fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod env;
pub mod estimators;
pub mod exec;
pub mod harness;
pub mod index;
pub mod lower_bound;
pub mod policy;

pub use env::{ArmDistribution, BanditInstance};
pub use estimators::{ConfidenceParams, SampleBuffer};
pub use exec::Execution;
pub use index::{optimistic_mean, IndexResult, Solver};
pub use lower_bound::DiscreteMeasure;
pub use policy::PolicyState;
