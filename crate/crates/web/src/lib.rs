//! Browser bindings. Every function takes and returns JSON strings; errors come
//! back as `{"error": "..."}` so the page never has to catch exceptions.

use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

use wmms_core::algorithms::{bag_filling_half_shares, restricted_greedy, round_robin};
use wmms_core::generators::{counterexample, stochastic_agents, Distribution, EntitlementProfile};
use wmms_core::lp::{build_and_solve_lp, round_assignment};
use wmms_core::model::guarantee_report;
use wmms_core::num::{format_decimal, format_rational, ratio};
use wmms_core::solver::{best_achievable_min_ratio, share_vector_exact, share_vector_heuristic};
use wmms_core::{Error, Instance, Ratio, ShareVector, SolverBudget};

/// Small enough to keep the page responsive.
const STATE_BUDGET: u64 = 2_000_000;

fn respond<T: Serialize>(result: Result<T, Error>) -> String {
    match result {
        Ok(v) => serde_json::to_string(&v).unwrap_or_else(|e| json!({ "error": e.to_string() }).to_string()),
        Err(e) => json!({ "error": e.to_string() }).to_string(),
    }
}

/// Exact shares when the search fits the budget, heuristic lower bounds otherwise.
fn shares_for(instance: &Instance) -> Result<ShareVector, Error> {
    match share_vector_exact(instance, SolverBudget::new(STATE_BUDGET)?) {
        Err(Error::BudgetExhausted { .. }) => share_vector_heuristic(instance, 20, 0),
        other => other,
    }
}

/// Random instance with uniform(0, 1) values and random entitlements.
#[wasm_bindgen]
pub fn random_instance(n: usize, m: usize, seed: u64) -> String {
    respond((|| {
        let entitlements = EntitlementProfile::Random.entitlements(n, seed);
        let dists = vec![Distribution::default()];
        let instance = stochastic_agents(m, &dists, entitlements, seed)?;
        Ok(instance.to_raw())
    })())
}

/// Per-agent table: entitlement, share and proportional share `e_i V_i(M)`.
#[wasm_bindgen]
pub fn shares_table(instance_json: &str) -> String {
    respond((|| {
        let instance = Instance::from_json(instance_json)?;
        let shares = shares_for(&instance)?;
        let rows: Vec<_> = (0..instance.agent_count())
            .map(|i| {
                let proportional = instance.entitlement(i) * instance.total_value(i);
                json!({
                    "agent": i + 1,
                    "entitlement": format_decimal(instance.entitlement(i), 4),
                    "share": format_decimal(shares.value(i), 4),
                    "share_exact": format_rational(shares.value(i)),
                    "proportional": format_decimal(&proportional, 4),
                })
            })
            .collect();
        Ok(json!({ "method": shares.method().label(), "rows": rows }))
    })())
}

/// Runs `algorithm` (`roundrobin`, `bagfill`, `restricted`, `lp` or `best`)
/// and reports each agent's value against its share.
#[wasm_bindgen]
pub fn run_allocation(instance_json: &str, algorithm: &str) -> String {
    respond((|| {
        let instance = Instance::from_json(instance_json)?;
        let shares = shares_for(&instance)?;
        let allocation = match algorithm {
            "roundrobin" => round_robin(&instance),
            "bagfill" => bag_filling_half_shares(&instance, &shares)?,
            "restricted" => restricted_greedy(&instance, &shares, true)?.allocation,
            "lp" => round_assignment(&instance, &build_and_solve_lp(&instance)?)?,
            "best" => best_achievable_min_ratio(&instance, &shares, SolverBudget::new(STATE_BUDGET)?)?.allocation,
            other => return Err(Error::InvalidConfig(format!("unknown algorithm '{other}'"))),
        };
        let report = guarantee_report(&instance, &allocation, &shares)?;
        let agents: Vec<_> = report
            .per_agent
            .iter()
            .enumerate()
            .map(|(i, g)| {
                json!({
                    "agent": i + 1,
                    "items": allocation.bundle(i).iter().map(|j| j + 1).collect::<Vec<_>>(),
                    "received": format_decimal(&g.received_value, 4),
                    "share": format_decimal(&g.share_value, 4),
                    "ratio": ratio_text(&g.ratio),
                })
            })
            .collect();
        Ok(json!({
            "share_method": shares.method().label(),
            "min_ratio": ratio_text(&report.min_ratio),
            "agents": agents,
        }))
    })())
}

fn ratio_text(r: &Ratio) -> String {
    match r {
        Ratio::Finite(v) => format_decimal(v, 4),
        Ratio::Infinite => "inf".into(),
    }
}

/// Best achievable ratio on the worst-case family for `eps = 1/k`,
/// `k = k_min..=k_max`, next to the upper bound `(1/n + n eps) / (1 - (n-1) eps)`.
#[wasm_bindgen]
pub fn counterexample_curve(n: usize, k_min: u32, k_max: u32) -> String {
    respond((|| {
        if n > 4 {
            return Err(Error::InvalidGenerator("n is limited to 4 in the browser".into()));
        }
        let mut points = Vec::new();
        for k in k_min.max(n as u32)..=k_max {
            let eps = ratio(1, k as i64);
            let instance = counterexample(n, &eps)?;
            let shares = share_vector_exact(&instance, SolverBudget::new(STATE_BUDGET)?)?;
            let best = best_achievable_min_ratio(&instance, &shares, SolverBudget::new(STATE_BUDGET)?)?;
            let agents = ratio(n as i64, 1);
            let upper = (ratio(1, 1) / &agents + &agents * &eps) / (ratio(1, 1) - (&agents - ratio(1, 1)) * &eps);
            points.push(json!({
                "epsilon": format_rational(&eps),
                "ratio": best.ratio.to_f64(),
                "upper": wmms_core::num::to_f64(&upper),
                "floor": 1.0 / n as f64,
            }));
        }
        Ok(points)
    })())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_through_json() {
        let inst = random_instance(3, 6, 1);
        let table: serde_json::Value = serde_json::from_str(&shares_table(&inst)).unwrap();
        assert_eq!(table["rows"].as_array().unwrap().len(), 3);
        for alg in ["roundrobin", "bagfill", "lp", "best"] {
            let out: serde_json::Value = serde_json::from_str(&run_allocation(&inst, alg)).unwrap();
            assert!(out.get("error").is_none(), "{alg}: {out}");
        }
    }

    #[test]
    fn errors_are_reported_as_json() {
        let out: serde_json::Value = serde_json::from_str(&run_allocation("{}", "roundrobin")).unwrap();
        assert!(out["error"].is_string());
        let out: serde_json::Value = serde_json::from_str(&counterexample_curve(9, 10, 12)).unwrap();
        assert!(out["error"].is_string());
    }

    #[test]
    fn curve_stays_between_bounds() {
        let out: serde_json::Value = serde_json::from_str(&counterexample_curve(2, 3, 8)).unwrap();
        for p in out.as_array().unwrap() {
            let r = p["ratio"].as_f64().unwrap();
            assert!(r >= 0.5 - 1e-12 && r <= p["upper"].as_f64().unwrap() + 1e-12);
        }
    }
}
