//! Fractional relaxation of the allocation problem and its rounding.
//!
//! The relaxation asks for weights `f[i][j] >= 0` with
//!
//! * `sum_i f[i][j] <= 1` for every item `j`, and
//! * `sum_j V_i(b_j) f[i][j] >= e_i V_i(M)` for every agent `i`.
//!
//! `f[i][j] = e_i` is always feasible. A vertex of this polytope has at most
//! `n + m` non-zero weights and its support graph is a pseudoforest, which
//! [`round_assignment`] turns into an integral allocation where every agent
//! loses at most one fractional item.

mod rounding;
pub mod simplex;
mod support;
mod vertex;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Instance;
use crate::num::Rational;

pub use rounding::{round_assignment, rounding_certificate, AgentCertificate};
pub use support::{build_support_graph, Component, ComponentKind, SupportGraph};

/// Fractional item weights, one row per agent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FractionalAssignment {
    weights: Vec<Vec<Rational>>,
    basic: bool,
}

impl FractionalAssignment {
    /// Wraps `weights`, checking the column constraint and whether the point is a
    /// vertex of the relaxation for `instance`.
    pub fn new(instance: &Instance, weights: Vec<Vec<Rational>>) -> Result<Self> {
        check_shape(instance, &weights)?;
        let basic = vertex::is_vertex(instance, &weights);
        Ok(FractionalAssignment { weights, basic })
    }

    pub(crate) fn from_vertex(weights: Vec<Vec<Rational>>) -> Self {
        FractionalAssignment { weights, basic: true }
    }

    pub fn weights(&self) -> &[Vec<Rational>] {
        &self.weights
    }

    pub fn weight(&self, agent: usize, item: usize) -> &Rational {
        &self.weights[agent][item]
    }

    pub fn is_basic(&self) -> bool {
        self.basic
    }

    pub fn agent_count(&self) -> usize {
        self.weights.len()
    }

    pub fn item_count(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn nonzero_count(&self) -> usize {
        self.weights
            .iter()
            .map(|row| row.iter().filter(|w| !w.is_zero()).count())
            .sum()
    }

    /// `sum_j V_i(b_j) f[i][j]`.
    pub fn fractional_value(&self, instance: &Instance, agent: usize) -> Rational {
        instance
            .row(agent)
            .iter()
            .zip(&self.weights[agent])
            .map(|(v, f)| v * f)
            .sum()
    }

    /// Both constraint families hold exactly.
    pub fn check_feasible(&self, instance: &Instance) -> Result<()> {
        check_shape(instance, &self.weights)?;
        for j in 0..instance.item_count() {
            let col: Rational = self.weights.iter().map(|row| &row[j]).sum();
            if col > Rational::one() {
                return Err(Error::InvalidAssignment(format!("item {} weighted above 1", j + 1)));
            }
        }
        for i in 0..instance.agent_count() {
            let target = instance.total_value(i) * instance.entitlement(i);
            if self.fractional_value(instance, i) < target {
                return Err(Error::InvalidAssignment(format!(
                    "agent {} falls short of its proportional value",
                    i + 1
                )));
            }
        }
        Ok(())
    }
}

fn check_shape(instance: &Instance, weights: &[Vec<Rational>]) -> Result<()> {
    if weights.len() != instance.agent_count()
        || weights.iter().any(|row| row.len() != instance.item_count())
    {
        return Err(Error::DimensionMismatch("weights do not match instance".into()));
    }
    if weights.iter().flatten().any(|w| w.is_negative()) {
        return Err(Error::InvalidAssignment("negative weight".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LpMethod {
    /// Start from the proportional point and move to a vertex along null-space directions.
    #[default]
    Crossover,
    /// Dense-tableau simplex with Bland's rule.
    Simplex,
}

/// A vertex of the relaxation for `instance`.
pub fn build_and_solve_lp(instance: &Instance) -> Result<FractionalAssignment> {
    solve_lp(instance, LpMethod::default())
}

pub fn solve_lp(instance: &Instance, method: LpMethod) -> Result<FractionalAssignment> {
    if instance.item_count() == 0 {
        return Ok(FractionalAssignment::from_vertex(vec![Vec::new(); instance.agent_count()]));
    }
    if let Some(agent) = (0..instance.agent_count()).find(|&i| instance.total_value(i).is_zero()) {
        return Err(Error::ZeroTotalValuation { agent });
    }
    let weights = match method {
        LpMethod::Crossover => vertex::crossover_from_proportional(instance),
        LpMethod::Simplex => simplex::feasible_vertex(instance)?,
    };
    Ok(FractionalAssignment::from_vertex(weights))
}
