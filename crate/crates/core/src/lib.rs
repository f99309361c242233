//! Numerical laboratory for Bayesian offline-to-online reinforcement
//! learning: conjugate bandit and linear-MDP agents, regret and information
//! quantities, and a tabular bootstrapped-ensemble agent.

// `!(x > 0.0)` rejects NaN along with the range; index loops mirror the math.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bandit;
pub mod boorl;
pub mod bounds;
pub mod error;
pub mod harness;
pub mod linmdp;
pub mod par;
pub mod rng;
pub mod stats;
pub mod trace;

pub use error::{LabError, Result};
pub use trace::RegretTrace;
