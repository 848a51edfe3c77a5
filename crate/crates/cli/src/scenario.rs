//! Scenario files: JSON documents holding a market, optional starting
//! bids, and dynamics settings. Amounts are written in natural units with
//! an explicit grid increment and converted to exact integer grid units at
//! parse time.

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use matchmarket::{default_step_budget, BidMatrix, Market, Money, MoveOrdering, ResponsePolicy};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScenarioFile {
    epsilon: f64,
    values: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bids: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    policy: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ordering: Option<OrderingField>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_steps: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum OrderingField {
    Name(String),
    List(Vec<usize>),
}

/// A fully validated scenario, ready to run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub epsilon: f64,
    pub market: Market,
    pub bids: BidMatrix,
    pub policy: ResponsePolicy,
    pub ordering: MoveOrdering,
    pub seed: u64,
    pub max_steps: usize,
}

fn to_units(amount: f64, epsilon: f64, what: &str, row: usize, col: usize) -> Result<Money> {
    let ratio = amount / epsilon;
    let rounded = ratio.round();
    if (ratio - rounded).abs() > 1e-6 {
        bail!("{what}[{row}][{col}] = {amount} is not a multiple of epsilon = {epsilon}");
    }
    if rounded < 0.0 {
        bail!("{what}[{row}][{col}] = {amount} is negative");
    }
    Ok(Money::from_units(rounded as i64))
}

/// Parses and validates a scenario document.
pub fn parse_scenario(document: &str) -> Result<Scenario> {
    let file: ScenarioFile =
        serde_json::from_str(document).context("scenario is not valid JSON")?;
    if file.epsilon.is_nan() || file.epsilon <= 0.0 {
        bail!("epsilon must be positive");
    }
    let eps = file.epsilon;
    let mut value_rows = Vec::with_capacity(file.values.len());
    for (i, row) in file.values.iter().enumerate() {
        let mut out = Vec::with_capacity(row.len());
        for (j, &v) in row.iter().enumerate() {
            out.push(to_units(v, eps, "values", i, j)?);
        }
        value_rows.push(out);
    }
    let market = Market::new(value_rows).map_err(|e| anyhow!("invalid values: {e}"))?;
    let bids = match &file.bids {
        None => BidMatrix::truthful(&market),
        Some(rows) => {
            let mut bid_rows = Vec::with_capacity(rows.len());
            for (i, row) in rows.iter().enumerate() {
                let mut out = Vec::with_capacity(row.len());
                for (j, &b) in row.iter().enumerate() {
                    out.push(to_units(b, eps, "bids", i, j)?);
                }
                bid_rows.push(out);
            }
            BidMatrix::new(&market, bid_rows).map_err(|e| anyhow!("invalid bids: {e}"))?
        }
    };
    let policy = match file.policy.as_deref() {
        None | Some("aligned") => ResponsePolicy::Aligned,
        Some("zero_fill") => ResponsePolicy::ZeroFill,
        Some(other) => bail!("unknown policy {other:?} (expected \"aligned\" or \"zero_fill\")"),
    };
    let seed = file.seed.unwrap_or(0);
    let ordering = match &file.ordering {
        None => MoveOrdering::RoundRobin,
        Some(OrderingField::Name(name)) => match name.as_str() {
            "round_robin" => MoveOrdering::RoundRobin,
            "random" => MoveOrdering::SeededRandom { seed },
            other => bail!(
                "unknown ordering {other:?} (expected \"round_robin\", \"random\" or an index list)"
            ),
        },
        Some(OrderingField::List(list)) => MoveOrdering::Explicit(list.clone()),
    };
    let max_steps = file
        .max_steps
        .unwrap_or_else(|| default_step_budget(&market));
    Ok(Scenario {
        epsilon: eps,
        market,
        bids,
        policy,
        ordering,
        seed,
        max_steps,
    })
}

/// Serializes a scenario back into the document format, in natural units.
pub fn emit_scenario(scenario: &Scenario) -> String {
    let eps = scenario.epsilon;
    let natural = |m: Money| m.units() as f64 * eps;
    let values: Vec<Vec<f64>> = (0..scenario.market.n_real_buyers())
        .map(|i| {
            scenario
                .market
                .value_row(i)
                .iter()
                .map(|&v| natural(v))
                .collect()
        })
        .collect();
    let bids: Vec<Vec<f64>> = (0..scenario.market.n_real_buyers())
        .map(|i| scenario.bids.row(i).iter().map(|&b| natural(b)).collect())
        .collect();
    let file = ScenarioFile {
        epsilon: eps,
        values,
        bids: Some(bids),
        policy: Some(
            match scenario.policy {
                ResponsePolicy::Aligned => "aligned",
                ResponsePolicy::ZeroFill => "zero_fill",
            }
            .to_string(),
        ),
        ordering: Some(match &scenario.ordering {
            MoveOrdering::RoundRobin => OrderingField::Name("round_robin".into()),
            MoveOrdering::SeededRandom { .. } => OrderingField::Name("random".into()),
            MoveOrdering::Explicit(list) => OrderingField::List(list.clone()),
        }),
        seed: Some(scenario.seed),
        max_steps: Some(scenario.max_steps),
    };
    serde_json::to_string_pretty(&file).expect("scenario serializes")
}

/// Formats a grid amount in natural units, as an integer when exact.
pub fn fmt_amount(amount: Money, epsilon: f64) -> String {
    let x = amount.units() as f64 * epsilon;
    if x.fract() == 0.0 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use matchmarket::Termination;

    #[test]
    fn parse_defaults_to_truthful_round_robin() {
        let s = parse_scenario(r#"{"epsilon": 1, "values": [[10], [5], [2]]}"#).unwrap();
        assert_eq!(s.market.n_real_buyers(), 3);
        assert_eq!(s.bids.bid(0, 0), Money::from_units(10));
        assert_eq!(s.policy, ResponsePolicy::Aligned);
        assert_eq!(s.ordering, MoveOrdering::RoundRobin);
        assert!(s.max_steps >= 1);
    }

    #[test]
    fn parse_scales_by_epsilon() {
        let s = parse_scenario(r#"{"epsilon": 0.5, "values": [[2.5, 1.0]], "bids": [[2.0, 0.5]]}"#)
            .unwrap();
        assert_eq!(s.market.value(0, 0), Money::from_units(5));
        assert_eq!(s.bids.bid(0, 0), Money::from_units(4));
        assert_eq!(s.bids.bid(0, 1), Money::from_units(1));
    }

    #[test]
    fn parse_rejects_off_grid_and_overbids() {
        let err = parse_scenario(r#"{"epsilon": 1, "values": [[2.5]]}"#).unwrap_err();
        assert!(err.to_string().contains("values[0][0]"));

        let err = parse_scenario(r#"{"epsilon": 1, "values": [[2]], "bids": [[3]]}"#).unwrap_err();
        assert!(err.to_string().contains("invalid bids"));

        let err = parse_scenario(r#"{"epsilon": 1, "values": [[2]], "ordering": "sideways"}"#)
            .unwrap_err();
        assert!(err.to_string().contains("unknown ordering"));
    }

    #[test]
    fn explicit_ordering_and_zero_fill_parse() {
        let s = parse_scenario(
            r#"{"epsilon": 1, "values": [[3, 1], [2, 2]], "policy": "zero_fill",
                "ordering": [1, 0, 1], "seed": 7, "max_steps": 9}"#,
        )
        .unwrap();
        assert_eq!(s.policy, ResponsePolicy::ZeroFill);
        assert_eq!(s.ordering, MoveOrdering::Explicit(vec![1, 0, 1]));
        assert_eq!(s.max_steps, 9);
        // the run honors the explicit order
        let trace =
            matchmarket::run_dynamics(&s.market, &s.bids, s.policy, &s.ordering, s.max_steps)
                .unwrap();
        assert!(matches!(
            trace.termination,
            Termination::Converged | Termination::CycleDetected | Termination::StepLimit
        ));
    }

    #[test]
    fn emit_then_parse_round_trips() {
        let original = parse_scenario(
            r#"{"epsilon": 0.5, "values": [[10, 6], [8, 4], [3, 2]],
                "bids": [[9.5, 6], [8, 3.5], [0, 2]],
                "policy": "zero_fill", "ordering": "random", "seed": 11, "max_steps": 44}"#,
        )
        .unwrap();
        let reparsed = parse_scenario(&emit_scenario(&original)).unwrap();
        assert_eq!(reparsed.epsilon, original.epsilon);
        assert_eq!(reparsed.market, original.market);
        assert_eq!(reparsed.bids, original.bids);
        assert_eq!(reparsed.policy, original.policy);
        assert_eq!(reparsed.ordering, original.ordering);
        assert_eq!(reparsed.seed, original.seed);
        assert_eq!(reparsed.max_steps, original.max_steps);
    }
}
