//! Weighted maxmin shares (WMMS) for allocating indivisible goods among agents
//! with unequal entitlements.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] holds instances, allocations, the fairness score and guarantee reports.
//! * [`solver`] computes exact and heuristic shares and the best achievable ratio.
//! * [`algorithms`] has the round-robin, bag-filling and restricted-greedy allocators.
//! * [`lp`] builds the fractional relaxation, finds a vertex and rounds it.
//! * [`generators`] produces worst-case and stochastic instance families.
//! * [`harness`] runs bid-driven experiments and stochastic verification campaigns.
//!
//! All guarantee checks use exact rationals ([`Rational`]).

pub mod algorithms;
pub mod error;
pub mod generators;
pub mod harness;
pub mod lp;
pub mod model;
pub mod num;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
pub use model::{Allocation, GuaranteeReport, Instance, Ratio};
pub use num::Rational;
pub use solver::{ShareMethod, ShareVector, SolverBudget};
