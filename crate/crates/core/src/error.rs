use std::io;

use crate::num::Rational;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("negative valuation for agent {agent}, item {item}")]
    NegativeValuation { agent: usize, item: usize },
    #[error("entitlement of agent {agent} must be strictly positive")]
    NonPositiveEntitlement { agent: usize },
    #[error("entitlements sum to zero")]
    ZeroEntitlementSum,
    #[error("instance needs at least one agent")]
    NoAgents,
    #[error("cannot parse number {0:?}")]
    ParseNumber(String),
    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },
    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),
    #[error("agent {agent} values every item at zero")]
    ZeroTotalValuation { agent: usize },
    #[error("search budget exhausted after {explored} states")]
    BudgetExhausted {
        explored: u64,
        best: Option<Rational>,
    },
    #[error("operation requires equal entitlements")]
    UnequalEntitlements,
    /// Pairs are 0-based; the message shows them 1-based.
    #[error("restriction violated: item value exceeds share for (agent, item) pairs {}", one_based_pairs(.0))]
    RestrictionViolated(Vec<(usize, usize)>),
    #[error("invalid generator parameters: {0}")]
    InvalidGenerator(String),
    #[error("bid data line {line}: {message}")]
    Bids { line: u64, message: String },
    #[error("invalid fractional assignment: {0}")]
    InvalidAssignment(String),
    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn one_based_pairs(pairs: &[(usize, usize)]) -> String {
    let parts: Vec<String> = pairs.iter().map(|(i, j)| format!("({}, {})", i + 1, j + 1)).collect();
    parts.join(", ")
}

impl Error {
    /// True for errors caused by bad user input (as opposed to budget or I/O problems).
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::BudgetExhausted { .. } | Error::Io(_) | Error::Csv(_)
        )
    }
}
