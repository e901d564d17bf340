//! Multiple contrast tests for right-censored time-to-event data.
//!
//! Four procedures compare `k` groups on user-chosen pairwise contrasts
//! while controlling the familywise error rate:
//!
//! - Bonferroni-adjusted log-rank tests,
//! - Bonferroni-adjusted multi-directional (mdir) tests,
//! - a maximum test over all weighted log-rank statistics, calibrated by
//!   the equicoordinate quantile of their joint normal limit,
//! - a maximum over pooled Wald-type statistics calibrated by a wild
//!   bootstrap of the counting processes.
//!
//! A Monte Carlo engine ([`simulation`]) evaluates familywise error and
//! local power of the procedures on built-in scenarios.

pub mod cli;
pub mod design;
pub mod error;
pub mod estimators;
pub mod numerics;
pub mod procedures;
pub mod simulation;
pub mod survdata;
pub mod teststats;

pub use error::{Error, Result};
