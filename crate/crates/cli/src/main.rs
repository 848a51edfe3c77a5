//! Command-line runner for assignment-market scenarios: equilibrium
//! solving, best-response dynamics, state verification, brute-force
//! cross-checks, and chain-market generation.

mod output;
mod scenario;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use matchmarket::{
    brute_equilibrium_prices, brute_max_weight_matching, chain_market, is_competitive_equilibrium,
    is_terminal, max_equilibrium, mechanism_outcome, min_equilibrium, price_gap_within_epsilon,
    run_dynamics, social_welfare, BidMatrix, ChainVariant as CoreChainVariant, MarketError, Money,
    MoveOrdering, OracleBudget, ResponsePolicy, Termination,
};

use output::{write_solve, write_trace, OutputFormat};
use scenario::{emit_scenario, fmt_amount, parse_scenario, Scenario};

/// Exit codes: 0 success/converged, 1 error, 2 failed check or oracle
/// mismatch, 3 cycle detected, 4 step limit.
#[derive(Parser)]
#[command(name = "matchmarket", version, about)]
struct Cli {
    /// Scenario file (JSON)
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Table)]
    format: OutputFormat,
    /// Write output to a file instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute minimum and maximum equilibrium prices for the scenario bids
    Solve,
    /// Run the best-response dynamics and emit the trace
    Dynamics {
        /// Override the scenario policy
        #[arg(long, value_enum)]
        policy: Option<PolicyArg>,
        /// Override the scenario ordering (round_robin | random)
        #[arg(long)]
        ordering: Option<String>,
        /// Override the RNG seed for random ordering
        #[arg(long)]
        seed: Option<u64>,
        /// Override the step budget
        #[arg(long)]
        max_steps: Option<usize>,
    },
    /// Check equilibrium, terminality and stable-state properties of the
    /// scenario bids
    Verify,
    /// Cross-check the solvers against brute-force enumeration
    Oracle,
    /// Emit a chain-market scenario
    GenChain {
        /// Number of items (there are n+1 buyers)
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum)]
        variant: ChainVariantArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Aligned,
    #[value(name = "zero_fill", alias = "zero-fill")]
    ZeroFill,
}

impl From<PolicyArg> for ResponsePolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Aligned => ResponsePolicy::Aligned,
            PolicyArg::ZeroFill => ResponsePolicy::ZeroFill,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ChainVariantArg {
    SmallPrices,
    LargePrices,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn load_scenario(path: &Option<PathBuf>) -> Result<Scenario> {
    let path = path
        .as_ref()
        .ok_or_else(|| anyhow!("this command needs --scenario <path>"))?;
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read scenario {}", path.display()))?;
    parse_scenario(&text).with_context(|| format!("invalid scenario {}", path.display()))
}

fn open_sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(
            fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
        ),
        None => Box::new(std::io::stdout()),
    })
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Solve => {
            let s = load_scenario(&cli.scenario)?;
            let lo = min_equilibrium(&s.bids);
            let hi = max_equilibrium(&s.bids);
            let mut sink = open_sink(&cli.out)?;
            write_solve(
                &mut sink,
                cli.format,
                &lo,
                &hi,
                s.market.n_real_buyers(),
                s.epsilon,
            )?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Dynamics {
            policy,
            ordering,
            seed,
            max_steps,
        } => {
            let mut s = load_scenario(&cli.scenario)?;
            if let Some(p) = policy {
                s.policy = p.into();
            }
            if let Some(seed) = seed {
                s.seed = seed;
                if let MoveOrdering::SeededRandom { .. } = s.ordering {
                    s.ordering = MoveOrdering::SeededRandom { seed };
                }
            }
            if let Some(name) = ordering.as_deref() {
                s.ordering = match name {
                    "round_robin" => MoveOrdering::RoundRobin,
                    "random" => MoveOrdering::SeededRandom { seed: s.seed },
                    other => bail!("unknown ordering {other:?}"),
                };
            }
            if let Some(budget) = max_steps {
                s.max_steps = budget;
            }
            let trace = run_dynamics(&s.market, &s.bids, s.policy, &s.ordering, s.max_steps)?;
            let mut sink = open_sink(&cli.out)?;
            write_trace(
                &mut sink,
                cli.format,
                &trace,
                s.market.n_real_buyers(),
                s.epsilon,
            )?;
            Ok(match trace.termination {
                Termination::Converged => ExitCode::SUCCESS,
                Termination::CycleDetected => ExitCode::from(3),
                Termination::StepLimit => ExitCode::from(4),
            })
        }
        Command::Verify => {
            let s = load_scenario(&cli.scenario)?;
            let mut sink = open_sink(&cli.out)?;
            let code = verify(&s, &mut sink)?;
            Ok(code)
        }
        Command::Oracle => {
            let s = load_scenario(&cli.scenario)?;
            let mut sink = open_sink(&cli.out)?;
            let code = oracle_diff(&s, &mut sink)?;
            Ok(code)
        }
        Command::GenChain { n, variant } => {
            let variant = match variant {
                ChainVariantArg::SmallPrices => CoreChainVariant::SmallPrices,
                ChainVariantArg::LargePrices => CoreChainVariant::LargePrices,
            };
            let market = chain_market(n, variant)?;
            let scenario = Scenario {
                epsilon: 1.0,
                bids: BidMatrix::truthful(&market),
                policy: ResponsePolicy::Aligned,
                ordering: MoveOrdering::RoundRobin,
                seed: 0,
                max_steps: matchmarket::default_step_budget(&market),
                market,
            };
            let mut sink = open_sink(&cli.out)?;
            writeln!(sink, "{}", emit_scenario(&scenario))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Checks the scenario's bids as a (purportedly stable) market state and
/// reports each verdict. Exit code 2 when any check fails.
fn verify(s: &Scenario, sink: &mut dyn Write) -> Result<ExitCode> {
    let lo = min_equilibrium(&s.bids);
    let hi = max_equilibrium(&s.bids);
    let mut all_ok = true;
    let mut report = |name: &str, ok: bool, detail: String| -> Result<()> {
        all_ok &= ok;
        writeln!(
            sink,
            "{} {name}{}",
            if ok { "ok  " } else { "FAIL" },
            if detail.is_empty() {
                String::new()
            } else {
                format!(" ({detail})")
            }
        )?;
        Ok(())
    };

    report(
        "minimum equilibrium is competitive",
        is_competitive_equilibrium(&s.bids, &lo),
        format!("prices {}", join(&lo.prices, s.epsilon)),
    )?;
    report(
        "maximum equilibrium is competitive",
        is_competitive_equilibrium(&s.bids, &hi),
        format!("prices {}", join(&hi.prices, s.epsilon)),
    )?;
    report(
        "state is terminal for the policy",
        is_terminal(&s.market, &s.bids, s.policy),
        String::new(),
    )?;
    report(
        "max and min prices within one increment",
        price_gap_within_epsilon(&s.bids),
        String::new(),
    )?;

    let truthful = min_equilibrium(&BidMatrix::truthful(&s.market));
    let near_truthful = hi.prices.iter().zip(&truthful.prices).all(|(&p, &t)| {
        let gap = p - t;
        gap == Money::ZERO || gap == Money::EPSILON
    });
    report(
        "max prices within one increment above truthful minimum",
        near_truthful,
        format!("truthful minimum {}", join(&truthful.prices, s.epsilon)),
    )?;

    match brute_max_weight_matching(&s.market) {
        Ok((_, best)) => {
            let outcome = mechanism_outcome(&s.bids, None, None)?;
            let achieved = social_welfare(&s.market, &outcome.allocation)?;
            report(
                "mechanism allocation maximizes welfare",
                achieved == best,
                format!(
                    "achieved {} best {}",
                    fmt_amount(achieved, s.epsilon),
                    fmt_amount(best, s.epsilon)
                ),
            )?;
        }
        Err(MarketError::BudgetExceeded { .. }) => {
            writeln!(sink, "skip welfare check (instance above oracle budget)")?;
        }
        Err(e) => return Err(e.into()),
    }

    Ok(if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

/// Runs the brute-force suite against the solvers. Exit code 2 on any
/// disagreement.
fn oracle_diff(s: &Scenario, sink: &mut dyn Write) -> Result<ExitCode> {
    let budget = OracleBudget::default();
    let (oracle_lo, oracle_hi) = brute_equilibrium_prices(&s.bids, &budget)?;
    let lo = min_equilibrium(&s.bids);
    let hi = max_equilibrium(&s.bids);
    let lo_ok = lo.prices == oracle_lo;
    let hi_ok = hi.prices == oracle_hi;
    writeln!(
        sink,
        "{} minimum prices: engine {} oracle {}",
        if lo_ok { "ok  " } else { "FAIL" },
        join(&lo.prices, s.epsilon),
        join(&oracle_lo, s.epsilon),
    )?;
    writeln!(
        sink,
        "{} maximum prices: engine {} oracle {}",
        if hi_ok { "ok  " } else { "FAIL" },
        join(&hi.prices, s.epsilon),
        join(&oracle_hi, s.epsilon),
    )?;
    let eq_ok =
        is_competitive_equilibrium(&s.bids, &lo) && is_competitive_equilibrium(&s.bids, &hi);
    writeln!(
        sink,
        "{} both solver outcomes are competitive equilibria",
        if eq_ok { "ok  " } else { "FAIL" },
    )?;
    Ok(if lo_ok && hi_ok && eq_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn join(amounts: &[Money], eps: f64) -> String {
    amounts
        .iter()
        .map(|&a| fmt_amount(a, eps))
        .collect::<Vec<_>>()
        .join(" ")
}
