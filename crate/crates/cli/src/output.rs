//! Output formatting for solve results and dynamics traces.

use std::io::Write;

use anyhow::Result;
use serde_json::json;

use matchmarket::{Allocation, DynamicsTrace, Money, Outcome, Termination};

use crate::scenario::fmt_amount;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Table,
    Csv,
    Jsonl,
}

pub fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::Converged => "converged",
        Termination::CycleDetected => "cycle_detected",
        Termination::StepLimit => "step_limit",
    }
}

fn join_amounts(amounts: &[Money], eps: f64, sep: &str) -> String {
    amounts
        .iter()
        .map(|&a| fmt_amount(a, eps))
        .collect::<Vec<_>>()
        .join(sep)
}

/// Real buyers' items as tokens, `-` for unallocated.
fn allocation_tokens(alloc: &Allocation, n_real: usize) -> Vec<String> {
    (0..n_real)
        .map(|b| match alloc.item_of(b) {
            Some(j) => j.to_string(),
            None => "-".to_string(),
        })
        .collect()
}

fn allocation_json(alloc: &Allocation, n_real: usize) -> serde_json::Value {
    json!((0..n_real).map(|b| alloc.item_of(b)).collect::<Vec<_>>())
}

fn amounts_json(amounts: &[Money], eps: f64) -> serde_json::Value {
    json!(amounts
        .iter()
        .map(|&a| a.units() as f64 * eps)
        .collect::<Vec<_>>())
}

/// Writes `solve` results: minimum and maximum equilibrium prices plus
/// their supporting allocations.
pub fn write_solve(
    out: &mut dyn Write,
    format: OutputFormat,
    lo: &Outcome,
    hi: &Outcome,
    n_real: usize,
    eps: f64,
) -> Result<()> {
    match format {
        OutputFormat::Table => {
            writeln!(
                out,
                "minimum equilibrium prices: {}",
                join_amounts(&lo.prices, eps, " ")
            )?;
            writeln!(
                out,
                "maximum equilibrium prices: {}",
                join_amounts(&hi.prices, eps, " ")
            )?;
            writeln!(
                out,
                "allocation at minimum prices: {}",
                allocation_tokens(&lo.allocation, n_real).join(" ")
            )?;
            writeln!(
                out,
                "allocation at maximum prices: {}",
                allocation_tokens(&hi.allocation, n_real).join(" ")
            )?;
        }
        OutputFormat::Csv => {
            writeln!(out, "field,values")?;
            writeln!(out, "min_prices,{}", join_amounts(&lo.prices, eps, "|"))?;
            writeln!(out, "max_prices,{}", join_amounts(&hi.prices, eps, "|"))?;
            writeln!(
                out,
                "min_allocation,{}",
                allocation_tokens(&lo.allocation, n_real).join("|")
            )?;
            writeln!(
                out,
                "max_allocation,{}",
                allocation_tokens(&hi.allocation, n_real).join("|")
            )?;
        }
        OutputFormat::Jsonl => {
            let record = json!({
                "min_prices": amounts_json(&lo.prices, eps),
                "max_prices": amounts_json(&hi.prices, eps),
                "min_allocation": allocation_json(&lo.allocation, n_real),
                "max_allocation": allocation_json(&hi.allocation, n_real),
            });
            writeln!(out, "{record}")?;
        }
    }
    Ok(())
}

/// Writes a dynamics trace: one record per row-changing step, then the
/// termination record.
pub fn write_trace(
    out: &mut dyn Write,
    format: OutputFormat,
    trace: &DynamicsTrace,
    n_real: usize,
    eps: f64,
) -> Result<()> {
    match format {
        OutputFormat::Table => {
            writeln!(
                out,
                "start: prices {} allocation {}",
                join_amounts(&trace.initial_outcome.prices, eps, " "),
                allocation_tokens(&trace.initial_outcome.allocation, n_real).join(" ")
            )?;
            for s in &trace.steps {
                writeln!(
                    out,
                    "round {} buyer {} bids [{}] -> prices {} allocation {} utility {}",
                    s.round,
                    s.mover,
                    join_amounts(&s.new_row, eps, " "),
                    join_amounts(&s.outcome.prices, eps, " "),
                    allocation_tokens(&s.outcome.allocation, n_real).join(" "),
                    fmt_amount(s.mover_utility, eps),
                )?;
            }
            writeln!(
                out,
                "termination: {} after {} steps, {} rounds",
                termination_name(trace.termination),
                trace.steps.len(),
                trace.rounds
            )?;
        }
        OutputFormat::Csv => {
            writeln!(
                out,
                "round,mover,bids,prices,allocation,utility,termination"
            )?;
            for s in &trace.steps {
                writeln!(
                    out,
                    "{},{},{},{},{},{},",
                    s.round,
                    s.mover,
                    join_amounts(&s.new_row, eps, "|"),
                    join_amounts(&s.outcome.prices, eps, "|"),
                    allocation_tokens(&s.outcome.allocation, n_real).join("|"),
                    fmt_amount(s.mover_utility, eps),
                )?;
            }
            writeln!(out, ",,,,,,{}", termination_name(trace.termination))?;
        }
        OutputFormat::Jsonl => {
            for s in &trace.steps {
                let record = json!({
                    "round": s.round,
                    "mover": s.mover,
                    "bids": amounts_json(&s.new_row, eps),
                    "prices": amounts_json(&s.outcome.prices, eps),
                    "allocation": allocation_json(&s.outcome.allocation, n_real),
                    "utility": s.mover_utility.units() as f64 * eps,
                });
                writeln!(out, "{record}")?;
            }
            writeln!(
                out,
                "{}",
                json!({ "termination": termination_name(trace.termination) })
            )?;
        }
    }
    Ok(())
}
