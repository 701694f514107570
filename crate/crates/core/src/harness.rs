//! Bid data, batch experiments over random entitlements, and Monte Carlo checks
//! of the stochastic value models.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;
use std::time::Instant;

use num_traits::{One, Signed, Zero};
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algorithms::{bag_filling_half_shares, check_restriction, restricted_greedy, round_robin};
use crate::error::{Error, Result};
use crate::generators::{
    proportional_count_allocation, random_entitlements, stochastic_agents, stochastic_items, Distribution,
    EntitlementProfile,
};
use crate::lp::{build_and_solve_lp, round_assignment};
use crate::model::{guarantee_report_from_values, Allocation, Instance, Ratio};
use crate::num::{format_decimal, from_grid, parse_rational, serde_rational, to_f64, Rational};
use crate::rng::{derive_seed, substream};
use crate::solver::{
    best_achievable_from_values, share_vector_exact, share_vector_heuristic, ShareMethod, ShareVector,
    SolverBudget, DEFAULT_MAX_STATES,
};

/// Bids grouped by item category.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BidPool {
    categories: BTreeMap<String, Vec<Rational>>,
}

impl BidPool {
    pub fn new(categories: BTreeMap<String, Vec<Rational>>) -> Result<Self> {
        if categories.is_empty() {
            return Err(Error::Bids {
                line: 0,
                message: "bid pool is empty".into(),
            });
        }
        for (name, bids) in &categories {
            if bids.is_empty() || bids.iter().any(|b| !b.is_positive()) {
                return Err(Error::Bids {
                    line: 0,
                    message: format!("category '{name}' needs positive bids"),
                });
            }
        }
        Ok(BidPool { categories })
    }

    /// Reads CSV with header `category,bid`.
    pub fn from_reader(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "category" || &headers[1] != "bid" {
            return Err(Error::Bids {
                line: 1,
                message: "expected header 'category,bid'".into(),
            });
        }
        let mut categories: BTreeMap<String, Vec<Rational>> = BTreeMap::new();
        for record in rdr.records() {
            let record = record.map_err(|e| Error::Bids {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line());
            if record.len() != 2 {
                return Err(Error::Bids {
                    line,
                    message: format!("expected 2 fields, found {}", record.len()),
                });
            }
            let bid = parse_rational(&record[1]).map_err(|_| Error::Bids {
                line,
                message: format!("bid '{}' is not a number", &record[1]),
            })?;
            if !bid.is_positive() {
                return Err(Error::Bids {
                    line,
                    message: format!("bid '{}' is not positive", &record[1]),
                });
            }
            categories.entry(record[0].to_string()).or_default().push(bid);
        }
        Self::new(categories)
    }

    pub fn categories(&self) -> &BTreeMap<String, Vec<Rational>> {
        &self.categories
    }

    pub fn category_count(&self) -> usize {
        self.categories.len()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("category,bid\n");
        for (name, bids) in &self.categories {
            for b in bids {
                out.push_str(&format!("{name},{}\n", format_decimal(b, 2)));
            }
        }
        out
    }
}

pub fn ingest_bids(path: impl AsRef<Path>) -> Result<BidPool> {
    BidPool::from_reader(std::fs::File::open(path)?)
}

/// Synthetic stand-in for a real bid log: each category gets a price level
/// drawn uniformly from `min_level_cents..=max_level_cents`, and bids drawn
/// uniformly in cents up to that level. The default fixes every level at $100.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticPool {
    pub categories: usize,
    pub bids_per_category: usize,
    /// Each category's top bid, in cents, is drawn from this range.
    #[serde(default = "default_level")]
    pub min_level_cents: u64,
    #[serde(default = "default_level")]
    pub max_level_cents: u64,
    #[serde(default)]
    pub seed: u64,
}

fn default_level() -> u64 {
    10_000
}

impl Default for SyntheticPool {
    fn default() -> Self {
        SyntheticPool {
            categories: 200,
            bids_per_category: 40,
            min_level_cents: 10_000,
            max_level_cents: 10_000,
            seed: 0,
        }
    }
}

impl SyntheticPool {
    pub fn build(&self) -> Result<BidPool> {
        let mut categories = BTreeMap::new();
        for c in 0..self.categories {
            let mut rng = substream(self.seed, c as u64);
            let level: u64 = rng.random_range(self.min_level_cents..=self.max_level_cents);
            let bids = (0..self.bids_per_category)
                .map(|_| from_grid(rng.random_range(1..=level), 2))
                .collect();
            categories.insert(format!("c{c:04}"), bids);
        }
        BidPool::new(categories)
    }
}

/// `m` distinct categories; agent `i`'s value for item `j` is a bid drawn
/// uniformly (with replacement) from category `j`, independently per agent.
pub fn instance_from_bids(pool: &BidPool, entitlements: Vec<Rational>, m: usize, seed: u64) -> Result<Instance> {
    if pool.category_count() < m {
        return Err(Error::InvalidGenerator(format!(
            "need {m} categories, pool has {}",
            pool.category_count()
        )));
    }
    let names: Vec<&Vec<Rational>> = pool.categories.values().collect();
    let mut rng = substream(seed, 0);
    let chosen = sample(&mut rng, names.len(), m).into_vec();
    let rows = (0..entitlements.len())
        .map(|i| {
            let mut rng = substream(seed, 1 + i as u64);
            chosen
                .iter()
                .map(|&c| names[c][rng.random_range(0..names[c].len())].clone())
                .collect()
        })
        .collect();
    Instance::new(rows, entitlements)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum ShareConfig {
    #[default]
    Exact,
    Heuristic { iterations: usize },
}

impl ShareConfig {
    fn method(self) -> ShareMethod {
        match self {
            ShareConfig::Exact => ShareMethod::Exact,
            ShareConfig::Heuristic { .. } => ShareMethod::HeuristicLowerBound,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentAlgorithm {
    /// Best allocation found by search, exact when the budget allows.
    #[default]
    ExistenceSearch,
    RoundRobin,
    BagFilling,
    RestrictedGreedy,
    LpRounding,
}

fn default_max_states() -> u64 {
    DEFAULT_MAX_STATES
}

fn default_search_rounds() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub m_values: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub shares: ShareConfig,
    #[serde(default)]
    pub algorithm: ExperimentAlgorithm,
    #[serde(default = "default_max_states")]
    pub max_states: u64,
    /// Local-search rounds when the exact search does not fit the budget.
    #[serde(default = "default_search_rounds")]
    pub search_rounds: usize,
    #[serde(default = "random_profile")]
    pub entitlements: EntitlementProfile,
    /// Used when no bid file is supplied.
    #[serde(default)]
    pub synthetic_pool: SyntheticPool,
    #[serde(default)]
    pub details: bool,
    /// Record wall-clock time per row (makes output non-reproducible).
    #[serde(default)]
    pub timing: bool,
}

fn random_profile() -> EntitlementProfile {
    EntitlementProfile::Random
}

impl ExperimentConfig {
    pub fn new(n: usize, m_values: Vec<usize>, trials: usize, seed: u64) -> Self {
        ExperimentConfig {
            n,
            m_values,
            trials,
            seed,
            shares: ShareConfig::Exact,
            algorithm: ExperimentAlgorithm::ExistenceSearch,
            max_states: DEFAULT_MAX_STATES,
            search_rounds: default_search_rounds(),
            entitlements: EntitlementProfile::Random,
            synthetic_pool: SyntheticPool::default(),
            details: false,
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("n must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.m_values.is_empty() {
            return Err(Error::InvalidConfig("m_values must not be empty".into()));
        }
        if self.max_states == 0 {
            return Err(Error::InvalidConfig("max_states must be at least 1".into()));
        }
        if let ShareConfig::Heuristic { iterations: 0 } = self.shares {
            return Err(Error::InvalidConfig("heuristic iterations must be at least 1".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }
}

/// How far the reported ratio can be trusted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RatioQuality {
    /// Exact shares, exact search.
    Exact,
    /// Exact shares; the allocation search may have missed better allocations.
    LowerBound,
    /// Shares are lower bounds, so the ratio may overstate the truth.
    UpperBoundEstimate,
    /// Heuristic shares and heuristic search; neither direction is certain.
    Estimate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub m: usize,
    pub trial: usize,
    pub seed: u64,
    pub min_ratio: Ratio,
    pub quality: RatioQuality,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub m: usize,
    pub trial: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportRow {
    pub n: usize,
    pub m: usize,
    /// Minimum over successful trials of the instance-wide minimum ratio.
    pub min_ratio: Ratio,
    pub min_ratio_decimal: String,
    pub trials: usize,
    pub failed: usize,
    pub share_method: ShareMethod,
    /// Weakest quality among the trials in this row.
    pub quality: RatioQuality,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub rows: Vec<ReportRow>,
    #[serde(default)]
    pub failures: Vec<TrialFailure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<Vec<TrialRecord>>,
}

/// For every `m`, builds `trials` instances from `pool` with fresh random
/// entitlements, computes shares and the best allocation found, and keeps the
/// smallest ratio.
pub fn run_experiment(config: &ExperimentConfig, pool: &BidPool) -> Result<ExperimentReport> {
    config.validate()?;
    let budget = SolverBudget::new(config.max_states)?;
    let mut rows = Vec::with_capacity(config.m_values.len());
    let mut failures = Vec::new();
    let mut details = Vec::new();
    for &m in &config.m_values {
        let started = config.timing.then(Instant::now);
        let outcomes: Vec<std::result::Result<TrialRecord, TrialFailure>> =
            map_trials(config.trials, |t| run_trial(config, pool, budget, m, t));
        let mut min_ratio = Ratio::Infinite;
        let mut quality = RatioQuality::Exact;
        let mut failed = 0;
        for outcome in outcomes {
            match outcome {
                Ok(record) => {
                    if record.min_ratio < min_ratio {
                        min_ratio = record.min_ratio.clone();
                    }
                    quality = quality.max(record.quality);
                    if config.details {
                        details.push(record);
                    }
                }
                Err(f) => {
                    failed += 1;
                    failures.push(f);
                }
            }
        }
        rows.push(ReportRow {
            n: config.n,
            m,
            min_ratio_decimal: ratio_decimal(&min_ratio),
            min_ratio,
            trials: config.trials,
            failed,
            share_method: config.shares.method(),
            quality,
            wall_ms: started.map(|s| s.elapsed().as_millis() as u64),
        });
    }
    Ok(ExperimentReport {
        config: config.clone(),
        rows,
        failures,
        details: config.details.then_some(details),
    })
}

#[cfg(feature = "parallel")]
fn map_trials<T: Send>(count: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_trials<T>(count: usize, f: impl Fn(usize) -> T) -> Vec<T> {
    (0..count).map(f).collect()
}

fn ratio_decimal(r: &Ratio) -> String {
    match r {
        Ratio::Finite(v) => format_decimal(v, 6),
        Ratio::Infinite => "inf".into(),
    }
}

fn trial_seed(seed: u64, m: usize, trial: usize) -> u64 {
    derive_seed(derive_seed(seed, m as u64), trial as u64)
}

fn run_trial(
    config: &ExperimentConfig,
    pool: &BidPool,
    budget: SolverBudget,
    m: usize,
    trial: usize,
) -> std::result::Result<TrialRecord, TrialFailure> {
    let seed = trial_seed(config.seed, m, trial);
    let fail = |e: Error| TrialFailure {
        m,
        trial,
        message: e.to_string(),
    };
    let entitlements = match config.entitlements {
        EntitlementProfile::Random => random_entitlements(config.n, seed),
        other => other.entitlements(config.n, seed),
    };
    let instance = instance_from_bids(pool, entitlements, m, seed).map_err(fail)?;
    let shares = match config.shares {
        ShareConfig::Exact => share_vector_exact(&instance, budget),
        ShareConfig::Heuristic { iterations } => share_vector_heuristic(&instance, iterations, seed),
    }
    .map_err(fail)?;
    let (min_ratio, exact_search) = match config.algorithm {
        ExperimentAlgorithm::ExistenceSearch => {
            existence_search(&instance, &shares, budget, config.search_rounds).map_err(fail)?
        }
        alg => {
            let alloc = run_algorithm(&instance, &shares, alg).map_err(fail)?;
            let report = guarantee_report_from_values(&instance, &alloc, shares.values()).map_err(fail)?;
            (report.min_ratio, true)
        }
    };
    let quality = match (shares.method(), exact_search) {
        (ShareMethod::Exact, true) => RatioQuality::Exact,
        (ShareMethod::Exact, false) => RatioQuality::LowerBound,
        (ShareMethod::HeuristicLowerBound, true) => RatioQuality::UpperBoundEstimate,
        (ShareMethod::HeuristicLowerBound, false) => RatioQuality::Estimate,
    };
    Ok(TrialRecord {
        m,
        trial,
        seed,
        min_ratio,
        quality,
    })
}

fn run_algorithm(instance: &Instance, shares: &ShareVector, alg: ExperimentAlgorithm) -> Result<Allocation> {
    match alg {
        ExperimentAlgorithm::RoundRobin => Ok(round_robin(instance)),
        ExperimentAlgorithm::BagFilling => bag_filling_half_shares(instance, shares),
        ExperimentAlgorithm::RestrictedGreedy => Ok(restricted_greedy(instance, shares, false)?.allocation),
        ExperimentAlgorithm::LpRounding => {
            let f = build_and_solve_lp(instance)?;
            round_assignment(instance, &f)
        }
        ExperimentAlgorithm::ExistenceSearch => unreachable!("handled by the caller"),
    }
}

/// Best min ratio over complete allocations: exact when `n^m` fits the budget,
/// otherwise the best of a portfolio of allocations improved by local search.
/// The flag reports whether the answer is exact.
pub fn existence_search(
    instance: &Instance,
    shares: &ShareVector,
    budget: SolverBudget,
    rounds: usize,
) -> Result<(Ratio, bool)> {
    if budget.covers_enumeration(instance.agent_count(), instance.item_count()) {
        let best = best_achievable_from_values(instance, shares.values(), budget)?;
        return Ok((best.ratio, true));
    }
    let alloc = portfolio_search(instance, shares, rounds);
    let report = guarantee_report_from_values(instance, &alloc, shares.values())?;
    Ok((report.min_ratio, false))
}

/// Round-robin, restricted greedy (when the instance allows it) and LP rounding,
/// each completed and then improved by local search; the best one is returned.
pub fn portfolio_search(instance: &Instance, shares: &ShareVector, rounds: usize) -> Allocation {
    let mut starts = vec![round_robin(instance)];
    if shares.method() == ShareMethod::Exact
        && check_restriction(instance, shares).is_ok_and(|c| c.ok)
    {
        if let Ok(out) = restricted_greedy(instance, shares, true) {
            starts.push(out.allocation);
        }
    }
    let mut best: Option<(Ratio, Allocation)> = None;
    let consider = |start: Allocation, best: &mut Option<(Ratio, Allocation)>| {
        let improved = improve_min_ratio(instance, shares.values(), start, rounds);
        let ratio = guarantee_report_from_values(instance, &improved, shares.values())
            .expect("allocation matches instance")
            .min_ratio;
        if best.as_ref().is_none_or(|(r, _)| ratio > *r) {
            *best = Some((ratio, improved));
        }
    };
    for start in starts {
        consider(start, &mut best);
    }
    // The LP start is by far the most expensive, so it only runs when the
    // cheap starts leave some agent at or below its share.
    if best.as_ref().is_none_or(|(r, _)| *r <= Ratio::Finite(Rational::one())) {
        if let Ok(alloc) = build_and_solve_lp(instance).and_then(|f| round_assignment(instance, &f)) {
            consider(alloc, &mut best);
        }
    }
    best.expect("round robin always runs").1
}

/// Hill climbing on the worst agent's ratio: move an item to the worst agent or
/// swap one of its items for a better one, accepting a move only when the
/// minimum ratio strictly improves or fewer agents sit at it. Guided by
/// floating-point scores; the caller re-evaluates the result exactly.
fn improve_min_ratio(instance: &Instance, shares: &[Rational], start: Allocation, rounds: usize) -> Allocation {
    let n = instance.agent_count();
    let m = instance.item_count();
    let mut owner: Vec<Option<usize>> = (0..m).map(|j| start.owner(j)).collect();
    let active: Vec<bool> = shares.iter().map(|s| s.is_positive()).collect();
    let values: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let s = if active[i] { to_f64(&shares[i]) } else { 1.0 };
            instance.row(i).iter().map(|v| to_f64(v) / s).collect()
        })
        .collect();
    // Unallocated items go to whoever is currently worst off.
    let mut score = vec![0.0f64; n];
    for j in 0..m {
        if let Some(i) = owner[j] {
            score[i] += values[i][j];
        }
    }
    for j in 0..m {
        if owner[j].is_none() {
            let i = worst(&score, &active).unwrap_or(0);
            owner[j] = Some(i);
            score[i] += values[i][j];
        }
    }
    let key = |score: &[f64]| -> (f64, usize) {
        let min = (0..n).filter(|&i| active[i]).map(|i| score[i]).fold(f64::INFINITY, f64::min);
        let at = (0..n).filter(|&i| active[i] && score[i] <= min * (1.0 + 1e-12)).count();
        (min, at)
    };
    let better = |a: (f64, usize), b: (f64, usize)| a.0 > b.0 * (1.0 + 1e-12) || (a.0 >= b.0 && a.1 < b.1);
    for _ in 0..rounds {
        let Some(w) = worst(&score, &active) else { break };
        let current = key(&score);
        let mut improved = false;
        // Relocate an item from another agent to the worst one.
        'relocate: for j in 0..m {
            let k = owner[j].expect("complete");
            if k == w || values[w][j] <= 0.0 {
                continue;
            }
            score[k] -= values[k][j];
            score[w] += values[w][j];
            if better(key(&score), current) {
                owner[j] = Some(w);
                improved = true;
                break 'relocate;
            }
            score[k] += values[k][j];
            score[w] -= values[w][j];
        }
        if !improved {
            'swap: for a in (0..m).filter(|&a| owner[a] == Some(w)) {
                for b in 0..m {
                    let k = owner[b].expect("complete");
                    if k == w || values[w][b] <= values[w][a] {
                        continue;
                    }
                    let dw = values[w][b] - values[w][a];
                    let dk = values[k][a] - values[k][b];
                    score[w] += dw;
                    score[k] += dk;
                    if better(key(&score), current) {
                        owner[a] = Some(k);
                        owner[b] = Some(w);
                        improved = true;
                        break 'swap;
                    }
                    score[w] -= dw;
                    score[k] -= dk;
                }
            }
        }
        if !improved {
            break;
        }
    }
    let assignment: Vec<usize> = owner.into_iter().map(|o| o.expect("complete")).collect();
    Allocation::from_assignment(&assignment, n).expect("owners in range")
}

fn worst(score: &[f64], active: &[bool]) -> Option<usize> {
    (0..score.len())
        .filter(|&i| active[i])
        .min_by(|&a, &b| score[a].total_cmp(&score[b]).then(a.cmp(&b)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => ReportFormat::Json,
            _ => ReportFormat::Csv,
        }
    }
}

/// CSV with columns `n,m,min_ratio,trials,share_method,wall_ms`.
pub fn report_csv(report: &ExperimentReport) -> String {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["n", "m", "min_ratio", "trials", "share_method", "wall_ms"])
        .expect("in-memory write");
    for row in &report.rows {
        wtr.write_record([
            row.n.to_string(),
            row.m.to_string(),
            row.min_ratio_decimal.clone(),
            row.trials.to_string(),
            row.share_method.label().to_string(),
            row.wall_ms.map_or(String::new(), |w| w.to_string()),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(wtr.into_inner().expect("flush to vec")).expect("csv is utf-8")
}

pub fn report_json(report: &ExperimentReport) -> String {
    serde_json::to_string_pretty(report).expect("report serialises") + "\n"
}

pub fn emit_report(report: &ExperimentReport, format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    let text = match format {
        ReportFormat::Csv => report_csv(report),
        ReportFormat::Json => report_json(report),
    };
    std::fs::write(path, text)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StochasticModel {
    /// Values drawn per agent.
    I,
    /// Values drawn per item.
    II,
}

impl StochasticModel {
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "I" | "1" | "i" => Ok(StochasticModel::I),
            "II" | "2" | "ii" => Ok(StochasticModel::II),
            _ => Err(Error::InvalidConfig(format!("unknown model '{text}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StochasticConfig {
    pub model: StochasticModel,
    pub n: usize,
    pub m: usize,
    #[serde(with = "serde_rational")]
    pub epsilon: Rational,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub entitlements: EntitlementProfile,
    /// Confidence level for the interval on the success rate, in percent.
    #[serde(default = "default_confidence")]
    pub confidence_percent: u32,
}

fn default_confidence() -> u32 {
    95
}

impl StochasticConfig {
    pub fn new(model: StochasticModel, n: usize, m: usize, epsilon: Rational, trials: usize, seed: u64) -> Self {
        StochasticConfig {
            model,
            n,
            m,
            epsilon,
            trials,
            seed,
            entitlements: EntitlementProfile::Equal,
            confidence_percent: default_confidence(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StochasticReport {
    pub config: StochasticConfig,
    pub successes: usize,
    #[serde(with = "serde_rational")]
    pub success_rate: Rational,
    pub success_rate_decimal: String,
    /// Wilson score interval.
    pub interval_low: String,
    pub interval_high: String,
    /// Per trial, the smallest `received / (e_i V_i(M))` over agents.
    pub worst_fractions: Vec<String>,
}

/// Runs `trials` independent draws of the chosen model and counts the trials
/// in which the witness allocation gives every agent at least
/// `(1 - eps) e_i V_i(M)`, which implies a `(1 - eps)`-WMMS allocation.
///
/// Model I draws each agent's values from uniform(0, 1) and uses the
/// proportional-count witness. Model II gives item `j` a uniform(0, h_j)
/// distribution with `h_j` drawn from [0.4, 1] (so every mean is at least 0.2)
/// and uses LP rounding as the witness.
pub fn verify_stochastic_model(config: &StochasticConfig) -> Result<StochasticReport> {
    if config.n == 0 || config.trials == 0 {
        return Err(Error::InvalidConfig("n and trials must be at least 1".into()));
    }
    if config.epsilon.is_negative() || config.epsilon > Rational::one() {
        return Err(Error::InvalidConfig("epsilon must lie in [0, 1]".into()));
    }
    if !(1..100).contains(&config.confidence_percent) {
        return Err(Error::InvalidConfig("confidence_percent must lie in 1..=99".into()));
    }
    let fractions: Vec<Result<Ratio>> = map_trials(config.trials, |t| stochastic_trial(config, t));
    let fractions: Vec<Ratio> = fractions.into_iter().collect::<Result<_>>()?;
    let threshold = Ratio::Finite(Rational::one() - &config.epsilon);
    let successes = fractions.iter().filter(|f| **f >= threshold).count();
    let success_rate = Rational::new(successes.into(), config.trials.into());
    let (lo, hi) = wilson_interval(successes, config.trials, config.confidence_percent);
    Ok(StochasticReport {
        config: config.clone(),
        successes,
        success_rate_decimal: format_decimal(&success_rate, 4),
        success_rate,
        interval_low: format!("{lo:.4}"),
        interval_high: format!("{hi:.4}"),
        worst_fractions: fractions.iter().map(ratio_decimal).collect(),
    })
}

fn stochastic_trial(config: &StochasticConfig, trial: usize) -> Result<Ratio> {
    let seed = derive_seed(config.seed, trial as u64);
    let entitlements = config.entitlements.entitlements(config.n, derive_seed(seed, 1));
    let (instance, witness) = match config.model {
        StochasticModel::I => {
            let inst = stochastic_agents(config.m, &[Distribution::default()], entitlements, seed)?;
            let alloc = proportional_count_allocation(&inst);
            (inst, alloc)
        }
        StochasticModel::II => {
            let mut rng = substream(derive_seed(seed, 2), 0);
            let dists: Vec<Distribution> = (0..config.m)
                .map(|_| Distribution::uniform(Rational::zero(), from_grid(rng.random_range(400..=1000), 3)))
                .collect();
            let inst = stochastic_items(config.m, &dists, entitlements, seed)?;
            if (0..inst.agent_count()).any(|i| inst.total_value(i).is_zero()) {
                return Ok(Ratio::Infinite);
            }
            let f = build_and_solve_lp(&inst)?;
            let alloc = round_assignment(&inst, &f)?;
            (inst, alloc)
        }
    };
    let proportional: Vec<Rational> = (0..instance.agent_count())
        .map(|i| instance.total_value(i) * instance.entitlement(i))
        .collect();
    Ok(guarantee_report_from_values(&instance, &witness, &proportional)?.min_ratio)
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: usize, trials: usize, confidence_percent: u32) -> (f64, f64) {
    use statrs::distribution::{ContinuousCDF, Normal};
    let z = Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(1.0 - (1.0 - f64::from(confidence_percent) / 100.0) / 2.0);
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * ((p * (1.0 - p) / n) + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// `m` values `lo, lo + 1, ..., hi`.
pub fn m_range(lo: usize, hi: usize) -> Vec<usize> {
    (lo..=hi).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{int, ratio};

    #[test]
    fn parses_bids() {
        let pool = BidPool::from_reader("category,bid\ncam,3.50\ncam,2.00\n".as_bytes()).unwrap();
        assert_eq!(pool.categories()["cam"], vec![ratio(7, 2), int(2)]);
    }

    #[test]
    fn bad_bid_reports_line() {
        let err = BidPool::from_reader("category,bid\ncam,3.50\ncam,-1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Bids { line: 3, .. }), "{err:?}");
        let err = BidPool::from_reader("category,bid\ncam,abc\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Bids { line: 2, .. }), "{err:?}");
        assert!(BidPool::from_reader("category,bid\n".as_bytes()).is_err());
        assert!(BidPool::from_reader("cat,price\nx,1\n".as_bytes()).is_err());
    }

    #[test]
    fn synthetic_pool_shape() {
        let pool = SyntheticPool {
            categories: 10,
            bids_per_category: 100,
            min_level_cents: 100,
            max_level_cents: 10_000,
            seed: 3,
        }
        .build()
        .unwrap();
        assert_eq!(pool.category_count(), 10);
        assert!(pool.categories().values().all(|b| b.len() == 100));
        let again = BidPool::from_reader(pool.to_csv().as_bytes()).unwrap();
        assert_eq!(again, pool);
    }

    #[test]
    fn single_bid_categories_force_identical_rows() {
        let mut cats = BTreeMap::new();
        for (k, v) in [("a", 1), ("b", 2), ("c", 3)] {
            cats.insert(k.to_string(), vec![int(v)]);
        }
        let pool = BidPool::new(cats).unwrap();
        let inst = instance_from_bids(&pool, vec![int(1); 4], 3, 11).unwrap();
        assert!(inst.valuations().iter().all(|r| r == inst.row(0)));
        assert!(instance_from_bids(&pool, vec![int(1); 2], 4, 11).is_err());
        assert_eq!(instance_from_bids(&pool, vec![int(1); 2], 3, 5).unwrap(), instance_from_bids(&pool, vec![int(1); 2], 3, 5).unwrap());
    }

    #[test]
    fn wilson_interval_contains_rate() {
        let (lo, hi) = wilson_interval(95, 100, 95);
        assert!(lo < 0.95 && 0.95 < hi);
        assert!((lo - 0.8883).abs() < 1e-3, "{lo}");
        let (lo, hi) = wilson_interval(0, 10, 95);
        assert!(lo.abs() < 1e-12);
        assert!(hi > 0.2);
    }

    #[test]
    fn small_experiment_is_reproducible() {
        let pool = SyntheticPool::default().build().unwrap();
        let config = ExperimentConfig::new(2, vec![2, 3], 5, 9);
        let a = run_experiment(&config, &pool).unwrap();
        let b = run_experiment(&config, &pool).unwrap();
        assert_eq!(report_csv(&a), report_csv(&b));
        assert_eq!(a.rows.len(), 2);
        assert!(a.rows.iter().all(|r| r.quality == RatioQuality::Exact));
        let json = report_json(&a);
        let back: ExperimentReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a);
        let csv = report_csv(&a);
        assert!(csv.starts_with("n,m,min_ratio,trials,share_method,wall_ms\n"));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn full_slack_always_succeeds() {
        let mut config = StochasticConfig::new(StochasticModel::I, 4, 40, int(0), 5, 1);
        config.entitlements = EntitlementProfile::Equal;
        let report = verify_stochastic_model(&config).unwrap();
        assert!(report.successes <= 5);
        config.epsilon = int(1);
        assert_eq!(verify_stochastic_model(&config).unwrap().successes, 5);
    }
}
