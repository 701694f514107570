//! `wmms` command-line tool.
//!
//! Exit codes: 0 on success, 2 for invalid input, 3 when a search budget runs
//! out, 1 for anything else (I/O and the like).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use wmms_core::algorithms::{bag_filling_half_shares, restricted_greedy, round_robin};
use wmms_core::generators::{generate, Distribution, EntitlementProfile, Family, GeneratorSpec};
use wmms_core::harness::{
    emit_report, ingest_bids, run_experiment, verify_stochastic_model, ExperimentConfig, ReportFormat,
    StochasticConfig, StochasticModel, SyntheticPool,
};
use wmms_core::lp::{build_and_solve_lp, round_assignment, rounding_certificate};
use wmms_core::model::guarantee_report;
use wmms_core::num::{format_rational, parse_rational, NumberText};
use wmms_core::solver::{share_vector_exact, wmms_exact, wmms_heuristic_lower_bound, DEFAULT_MAX_STATES};
use wmms_core::{Error, Instance, Rational, ShareMethod, ShareVector, SolverBudget};

#[derive(Parser)]
#[command(name = "wmms", version, about = "Weighted maxmin shares for indivisible goods")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the weighted maxmin share of one agent or all of them.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        /// 1-based agent index; all agents when omitted.
        #[arg(long)]
        agent: Option<usize>,
        /// Use local search with this many restarts instead of the exact solver.
        #[arg(long, value_name = "N")]
        heuristic: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_name = "STATES", default_value_t = DEFAULT_MAX_STATES)]
        budget: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run an allocation algorithm and report how each agent fares.
    Allocate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum)]
        alg: Alg,
        /// JSON array of per-agent shares.
        #[arg(long, conflicts_with = "exact")]
        shares: Option<PathBuf>,
        /// Compute exact shares (the default when `--shares` is absent).
        #[arg(long)]
        exact: bool,
        /// Hand out leftover items after the restricted greedy phase.
        #[arg(long)]
        complete: bool,
        #[arg(long, value_name = "STATES", default_value_t = DEFAULT_MAX_STATES)]
        budget: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Generate an instance file.
    Gen {
        #[arg(long)]
        family: String,
        #[arg(long, default_value_t = 0)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        m: usize,
        /// Rational such as `1/10` (counterexample family).
        #[arg(long)]
        epsilon: Option<String>,
        /// Value distribution, e.g. `uniform:0,1` or `point:1/2`. Repeat to give
        /// one per agent or item; a single one is shared.
        #[arg(long = "dist")]
        dists: Vec<String>,
        /// equal, linear or random.
        #[arg(long, default_value = "equal")]
        entitlements: String,
        /// Bid CSV for the bids family; the built-in synthetic pool otherwise.
        #[arg(long)]
        bids: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the min-ratio experiment described by a JSON config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        bids: Option<PathBuf>,
        /// `.csv` or `.json`.
        #[arg(short, long)]
        output: PathBuf,
        /// Fill in the wall_ms column.
        #[arg(long)]
        timing: bool,
    },
    /// Estimate how often the proportional witness succeeds on random instances.
    VerifyStochastic {
        #[arg(long, value_parser = ["I", "II"])]
        model: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        epsilon: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "equal")]
        entitlements: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Alg {
    Roundrobin,
    Bagfill,
    Restricted,
    Lp,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::BudgetExhausted { .. } => 3,
        e if e.is_validation() => 2,
        _ => 1,
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Solve {
            instance,
            agent,
            heuristic,
            seed,
            budget,
            output,
        } => {
            let inst = read_instance(&instance)?;
            let budget = SolverBudget::new(budget)?;
            let agents = match agent {
                Some(k) => vec![one_based(k, inst.agent_count(), "agent")?],
                None => (0..inst.agent_count()).collect(),
            };
            let mut results = Vec::with_capacity(agents.len());
            for i in agents {
                results.push(match heuristic {
                    Some(iters) => {
                        let h = wmms_heuristic_lower_bound(&inst, i, iters, seed)?;
                        SolveOutput {
                            agent: i + 1,
                            value: format_rational(&h.value),
                            witness: h.witness.to_one_based(),
                            method: ShareMethod::HeuristicLowerBound.label(),
                            states_explored: None,
                        }
                    }
                    None => {
                        let s = wmms_exact(&inst, i, budget)?;
                        SolveOutput {
                            agent: i + 1,
                            value: format_rational(&s.value),
                            witness: s.witness.to_one_based(),
                            method: ShareMethod::Exact.label(),
                            states_explored: Some(s.states_explored),
                        }
                    }
                });
            }
            if agent.is_some() {
                write_json(output.as_deref(), &results[0])
            } else {
                write_json(output.as_deref(), &results)
            }
        }
        Command::Allocate {
            instance,
            alg,
            shares,
            exact: _,
            complete,
            budget,
            output,
        } => {
            let inst = read_instance(&instance)?;
            let budget = SolverBudget::new(budget)?;
            let (shares, share_method) = match shares {
                Some(path) => (read_shares(&path, inst.agent_count())?, "provided"),
                None => (share_vector_exact(&inst, budget)?, ShareMethod::Exact.label()),
            };
            let mut out = AllocateOutput {
                algorithm: alg.label(),
                allocation: Vec::new(),
                share_method,
                shares: shares.values().iter().map(format_rational).collect(),
                guarantee: None,
                restricted: None,
                certificates: None,
            };
            let allocation = match alg {
                Alg::Roundrobin => round_robin(&inst),
                Alg::Bagfill => bag_filling_half_shares(&inst, &shares)?,
                Alg::Restricted => {
                    let r = restricted_greedy(&inst, &shares, complete)?;
                    out.restricted = Some(RestrictedInfo {
                        core_items: r.core_items,
                        completed: r.completed,
                    });
                    r.allocation
                }
                Alg::Lp => {
                    let f = build_and_solve_lp(&inst)?;
                    let alloc = round_assignment(&inst, &f)?;
                    let certs = rounding_certificate(&inst, &f, &alloc)?;
                    out.certificates = Some(
                        certs
                            .into_iter()
                            .map(|c| CertificateOutput {
                                agent: c.agent + 1,
                                proportional_share: format_rational(&c.proportional_share),
                                fractional_value: format_rational(&c.fractional_value),
                                max_item: format_rational(&c.max_item),
                                received: format_rational(&c.received),
                                holds: c.holds,
                            })
                            .collect(),
                    );
                    alloc
                }
            };
            out.allocation = allocation.to_one_based();
            out.guarantee = Some(serde_json::to_value(guarantee_report(&inst, &allocation, &shares)?)?);
            write_json(output.as_deref(), &out)
        }
        Command::Gen {
            family,
            n,
            m,
            epsilon,
            dists,
            entitlements,
            bids,
            seed,
            output,
        } => {
            let spec = GeneratorSpec {
                family: Family::parse(&family)?,
                n,
                m,
                epsilon: epsilon.as_deref().map(parse_rational).transpose()?,
                distributions: dists.iter().map(|d| Distribution::parse(d)).collect::<Result<_, _>>()?,
                entitlements: EntitlementProfile::parse(&entitlements)?,
                seed,
            };
            let pool = match (&bids, spec.family) {
                (Some(path), _) => Some(ingest_bids(path)?),
                (None, Family::Bids) => Some(SyntheticPool::default().build()?),
                _ => None,
            };
            let inst = generate(&spec, pool.as_ref())?;
            write_text(output.as_deref(), &(inst.to_json() + "\n"))
        }
        Command::Experiment {
            config,
            bids,
            output,
            timing,
        } => {
            let mut cfg = ExperimentConfig::from_json(&std::fs::read_to_string(&config)?)?;
            cfg.timing |= timing;
            let pool = match bids {
                Some(path) => ingest_bids(path)?,
                None => cfg.synthetic_pool.build()?,
            };
            let report = run_experiment(&cfg, &pool)?;
            emit_report(&report, ReportFormat::from_path(&output), &output)
        }
        Command::VerifyStochastic {
            model,
            n,
            m,
            epsilon,
            trials,
            seed,
            entitlements,
            output,
        } => {
            let mut cfg = StochasticConfig::new(
                StochasticModel::parse(&model)?,
                n,
                m,
                parse_rational(&epsilon)?,
                trials,
                seed,
            );
            cfg.entitlements = EntitlementProfile::parse(&entitlements)?;
            let report = verify_stochastic_model(&cfg)?;
            write_json(output.as_deref(), &report)
        }
    }
}

impl Alg {
    fn label(self) -> &'static str {
        match self {
            Alg::Roundrobin => "roundrobin",
            Alg::Bagfill => "bagfill",
            Alg::Restricted => "restricted",
            Alg::Lp => "lp",
        }
    }
}

#[derive(Serialize)]
struct SolveOutput {
    agent: usize,
    value: String,
    witness: Vec<Vec<usize>>,
    method: &'static str,
    states_explored: Option<u64>,
}

#[derive(Serialize)]
struct AllocateOutput {
    algorithm: &'static str,
    /// 1-based item indices per agent.
    allocation: Vec<Vec<usize>>,
    share_method: &'static str,
    shares: Vec<String>,
    guarantee: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    restricted: Option<RestrictedInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificates: Option<Vec<CertificateOutput>>,
}

#[derive(Serialize)]
struct RestrictedInfo {
    core_items: usize,
    completed: bool,
}

#[derive(Serialize)]
struct CertificateOutput {
    agent: usize,
    proportional_share: String,
    fractional_value: String,
    max_item: String,
    received: String,
    holds: bool,
}

fn one_based(k: usize, len: usize, what: &'static str) -> Result<usize, Error> {
    if k == 0 || k > len {
        return Err(Error::IndexOutOfRange { what, index: k, len });
    }
    Ok(k - 1)
}

fn read_instance(path: &Path) -> Result<Instance, Error> {
    Instance::from_json(&std::fs::read_to_string(path)?)
}

fn read_shares(path: &Path, agents: usize) -> Result<ShareVector, Error> {
    let texts: Vec<NumberText> = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    if texts.len() != agents {
        return Err(Error::DimensionMismatch(format!(
            "{} shares for {agents} agents",
            texts.len()
        )));
    }
    let values: Vec<Rational> = texts.iter().map(|t| parse_rational(&t.0)).collect::<Result<_, _>>()?;
    if values.iter().any(|v| *v < Rational::from_integer(0.into())) {
        return Err(Error::InvalidConfig("shares must be non-negative".into()));
    }
    Ok(ShareVector::new(values, None, ShareMethod::Exact))
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<(), Error> {
    write_text(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}
