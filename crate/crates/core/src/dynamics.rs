//! Best-response bidding dynamics under the maximum-equilibrium mechanism.
//!
//! Buyers take turns replacing their bid row with a policy-prescribed
//! response to the current maximum equilibrium. The aligned policy always
//! converges; the zero-fill policy (bid nothing on items outside the
//! current target set) can cycle forever. Responses are re-emitted even
//! when they gain nothing, so a run terminates exactly when every buyer's
//! emitted row equals his current row.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::equilibrium::{max_equilibrium, min_equilibrium, select_allocation};
use crate::error::{MarketError, Result};
use crate::market::{is_aligned, utility, Allocation, BidMatrix, Market, Outcome};
use crate::money::Money;
use crate::oracle::brute_max_weight_matching;

/// How a buyer fills the rest of his row when responding.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResponsePolicy {
    /// Shift the whole value row down to the target margin, floored at zero.
    Aligned,
    /// Bid only on the single item currently worth chasing (lowest index
    /// among those attaining the target surplus); zero everywhere else.
    ZeroFill,
}

/// The quantities a response is computed from: the best surplus the buyer
/// can aim for, and (for winners) the counterfactual outcome with his row
/// zeroed out.
#[derive(Clone, Debug)]
pub struct ResponseContext {
    /// Best achievable surplus `d`: for losers against the current prices,
    /// for winners against the zero-out counterfactual prices.
    pub target_surplus: Option<Money>,
    /// `max-eq` of the bids with this buyer removed; `None` for losers.
    pub counterfactual: Option<Outcome>,
}

impl ResponseContext {
    /// Prices the target was measured against.
    fn reference_prices<'a>(&'a self, current: &'a Outcome) -> &'a [Money] {
        match &self.counterfactual {
            Some(cf) => &cf.prices,
            None => &current.prices,
        }
    }
}

/// The realized outcome of the maximum-equilibrium mechanism: maximum
/// equilibrium prices plus the deterministic supported allocation.
pub fn mechanism_outcome(
    bids: &BidMatrix,
    previous: Option<&Allocation>,
    mover: Option<usize>,
) -> Result<Outcome> {
    let prices = max_equilibrium(bids).prices;
    let allocation = select_allocation(bids, &prices, previous, mover)?;
    Ok(Outcome { prices, allocation })
}

fn check_real(market: &Market, buyer: usize) -> Result<()> {
    if buyer >= market.n_real_buyers() {
        return Err(MarketError::NotARealBuyer { buyer });
    }
    Ok(())
}

/// Computes the target surplus (and, for winners, the counterfactual
/// outcome) that the best-response rules are built from.
pub fn response_context(
    market: &Market,
    bids: &BidMatrix,
    current: &Outcome,
    buyer: usize,
) -> Result<ResponseContext> {
    check_real(market, buyer)?;
    match current.allocation.item_of(buyer) {
        None => {
            let target = (0..market.n_items())
                .map(|j| market.value(buyer, j) - current.prices[j])
                .max();
            Ok(ResponseContext {
                target_surplus: target,
                counterfactual: None,
            })
        }
        Some(_) => {
            let counterfactual = max_equilibrium(&bids.with_zeroed_row(buyer));
            let target = (0..market.n_items())
                .map(|j| market.value(buyer, j) - counterfactual.prices[j])
                .max();
            Ok(ResponseContext {
                target_surplus: target,
                counterfactual: Some(counterfactual),
            })
        }
    }
}

fn aligned_target_row(market: &Market, buyer: usize, target: Money) -> Vec<Money> {
    market
        .value_row(buyer)
        .iter()
        .map(|&v| (v - target + Money::EPSILON).max(Money::ZERO))
        .collect()
}

/// Best response of an unallocated buyer: if no item beats its price, keep
/// the current row; otherwise shift the value row down to the best
/// available surplus, conceding one increment.
pub fn loser_best_response(
    market: &Market,
    bids: &BidMatrix,
    current: &Outcome,
    buyer: usize,
) -> Result<Vec<Money>> {
    check_real(market, buyer)?;
    if current.allocation.item_of(buyer).is_some() {
        return Err(MarketError::BuyerAllocated { buyer });
    }
    let ctx = response_context(market, bids, current, buyer)?;
    match ctx.target_surplus {
        Some(d) if d > Money::ZERO => Ok(aligned_target_row(market, buyer, d)),
        _ => Ok(bids.row(buyer).to_vec()),
    }
}

/// Best response of a winner: measure the best surplus against the market
/// without him; keep the row when it offers nothing better than what he
/// already gets, otherwise shift the value row down to it.
pub fn winner_best_response(
    market: &Market,
    bids: &BidMatrix,
    current: &Outcome,
    buyer: usize,
) -> Result<Vec<Money>> {
    check_real(market, buyer)?;
    if current.allocation.item_of(buyer).is_none() {
        return Err(MarketError::BuyerUnallocated { buyer });
    }
    let ctx = response_context(market, bids, current, buyer)?;
    let u = utility(market, current, buyer)?;
    match ctx.target_surplus {
        Some(d) if d > Money::ZERO && u != d => Ok(aligned_target_row(market, buyer, d)),
        _ => Ok(bids.row(buyer).to_vec()),
    }
}

/// Same target surplus as the corresponding aligned response, but bids
/// only on the items currently attaining it and zero elsewhere.
pub fn zero_fill_best_response(
    market: &Market,
    bids: &BidMatrix,
    current: &Outcome,
    buyer: usize,
) -> Result<Vec<Money>> {
    check_real(market, buyer)?;
    let ctx = response_context(market, bids, current, buyer)?;
    let Some(d) = ctx.target_surplus else {
        return Ok(bids.row(buyer).to_vec());
    };
    if d <= Money::ZERO {
        return Ok(bids.row(buyer).to_vec());
    }
    if current.allocation.item_of(buyer).is_some() && utility(market, current, buyer)? == d {
        return Ok(bids.row(buyer).to_vec());
    }
    let reference = ctx.reference_prices(current);
    // Commit to a single target item (lowest index among those attaining
    // the best surplus) and walk away from everything else. Singleton
    // commitment is what makes this policy able to cycle.
    let target = (0..market.n_items())
        .find(|&j| market.value(buyer, j) - reference[j] == d)
        .expect("the target surplus is attained somewhere");
    Ok((0..market.n_items())
        .map(|j| {
            if j == target {
                (market.value(buyer, j) - d + Money::EPSILON).max(Money::ZERO)
            } else {
                Money::ZERO
            }
        })
        .collect())
}

fn policy_response(
    market: &Market,
    bids: &BidMatrix,
    current: &Outcome,
    buyer: usize,
    policy: ResponsePolicy,
) -> Result<Vec<Money>> {
    match policy {
        ResponsePolicy::Aligned => {
            if current.allocation.item_of(buyer).is_some() {
                winner_best_response(market, bids, current, buyer)
            } else {
                loser_best_response(market, bids, current, buyer)
            }
        }
        ResponsePolicy::ZeroFill => zero_fill_best_response(market, bids, current, buyer),
    }
}

/// One dynamics transition from an explicit current outcome. Returns the
/// new bids, the resulting mechanism outcome (mover gets lowest allocation
/// priority), whether the row changed, and the mover's true utility.
fn step_from(
    market: &Market,
    bids: &BidMatrix,
    current: &Outcome,
    policy: ResponsePolicy,
    mover: usize,
) -> Result<(BidMatrix, Outcome, bool, Money)> {
    let row = policy_response(market, bids, current, mover, policy)?;
    if row.as_slice() == bids.row(mover) {
        let u = utility(market, current, mover)?;
        return Ok((bids.clone(), current.clone(), false, u));
    }
    let next = bids.with_row(market, mover, row)?;
    let outcome = mechanism_outcome(&next, Some(&current.allocation), Some(mover))?;
    let u = utility(market, &outcome, mover)?;
    Ok((next, outcome, true, u))
}

/// One dynamics transition from a fresh canonical outcome for `bids`.
pub fn step(
    market: &Market,
    bids: &BidMatrix,
    policy: ResponsePolicy,
    mover: usize,
) -> Result<(BidMatrix, Outcome, bool)> {
    check_real(market, mover)?;
    let current = mechanism_outcome(bids, None, None)?;
    let (next, outcome, changed, _) = step_from(market, bids, &current, policy, mover)?;
    Ok((next, outcome, changed))
}

/// Who moves when.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MoveOrdering {
    /// Real buyers in index order, round after round.
    RoundRobin,
    /// A fresh random permutation of the real buyers each round.
    SeededRandom { seed: u64 },
    /// A fixed list of real-buyer indices, repeated as one round.
    Explicit(Vec<usize>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    /// A full round changed no bid row.
    Converged,
    /// A previously seen bid matrix came back: the run can never terminate.
    CycleDetected,
    /// The step budget ran out first.
    StepLimit,
}

/// One recorded (row-changing) move.
#[derive(Clone, Debug)]
pub struct DynamicsStep {
    pub round: usize,
    pub mover: usize,
    pub old_row: Vec<Money>,
    pub new_row: Vec<Money>,
    /// Mechanism outcome right after the move.
    pub outcome: Outcome,
    pub mover_utility: Money,
}

/// Full record of a dynamics run. Quiet moves (re-emitting the same row)
/// are not recorded as steps.
#[derive(Clone, Debug)]
pub struct DynamicsTrace {
    pub initial_bids: BidMatrix,
    pub initial_outcome: Outcome,
    pub steps: Vec<DynamicsStep>,
    pub termination: Termination,
    pub final_bids: BidMatrix,
    pub final_outcome: Outcome,
    pub rounds: usize,
}

/// Runs the best-response dynamics until a full quiet round (converged), a
/// repeated bid matrix (cycle), or the step budget.
///
/// Cycle detection compares bid matrices only, which is sound for the
/// deterministic orderings; under random ordering a repeated matrix proves
/// nothing, so detection is off there and the budget is the backstop.
pub fn run_dynamics(
    market: &Market,
    initial_bids: &BidMatrix,
    policy: ResponsePolicy,
    ordering: &MoveOrdering,
    max_steps: usize,
) -> Result<DynamicsTrace> {
    if max_steps == 0 {
        return Err(MarketError::ZeroStepBudget);
    }
    let n_real = market.n_real_buyers();
    if let MoveOrdering::Explicit(list) = ordering {
        if list.is_empty() {
            return Err(MarketError::EmptyOrdering);
        }
        for &b in list {
            if b >= n_real {
                return Err(MarketError::InvalidOrdering { buyer: b, n_real });
            }
        }
    }
    let track_cycles = !matches!(ordering, MoveOrdering::SeededRandom { .. });
    let mut rng = match ordering {
        MoveOrdering::SeededRandom { seed } => Some(ChaCha8Rng::seed_from_u64(*seed)),
        _ => None,
    };

    let mut bids = initial_bids.clone();
    let mut outcome = mechanism_outcome(&bids, None, None)?;
    let initial_outcome = outcome.clone();
    let mut seen: HashSet<BidMatrix> = HashSet::new();
    seen.insert(bids.clone());
    let mut steps: Vec<DynamicsStep> = Vec::new();
    let mut total = 0usize;
    let mut round = 0usize;

    let finish = |termination, steps: Vec<DynamicsStep>, bids, outcome, round| DynamicsTrace {
        initial_bids: initial_bids.clone(),
        initial_outcome: initial_outcome.clone(),
        steps,
        termination,
        final_bids: bids,
        final_outcome: outcome,
        rounds: round,
    };

    loop {
        round += 1;
        let pass: Vec<usize> = match ordering {
            MoveOrdering::RoundRobin => (0..n_real).collect(),
            MoveOrdering::Explicit(list) => list.clone(),
            MoveOrdering::SeededRandom { .. } => {
                let mut order: Vec<usize> = (0..n_real).collect();
                order.shuffle(rng.as_mut().expect("rng present for random ordering"));
                order
            }
        };
        let mut changed_any = false;
        for mover in pass {
            if total == max_steps {
                return Ok(finish(Termination::StepLimit, steps, bids, outcome, round));
            }
            total += 1;
            let old_row = bids.row(mover).to_vec();
            let (next_bids, next_outcome, changed, u) =
                step_from(market, &bids, &outcome, policy, mover)?;
            if !changed {
                continue;
            }
            changed_any = true;
            steps.push(DynamicsStep {
                round,
                mover,
                old_row,
                new_row: next_bids.row(mover).to_vec(),
                outcome: next_outcome.clone(),
                mover_utility: u,
            });
            bids = next_bids;
            outcome = next_outcome;
            if track_cycles && !seen.insert(bids.clone()) {
                return Ok(finish(
                    Termination::CycleDetected,
                    steps,
                    bids,
                    outcome,
                    round,
                ));
            }
        }
        if !changed_any {
            return Ok(finish(Termination::Converged, steps, bids, outcome, round));
        }
    }
}

/// A generous default step budget: buyers x items x grid height x 4.
pub fn default_step_budget(market: &Market) -> usize {
    let n = market.n_real_buyers().max(1);
    let m = market.n_items().max(1);
    let levels = market.max_value().units() as usize + 1;
    n * m * levels * 4
}

/// Whether every real buyer's policy response reproduces his current row,
/// evaluated against the canonical mechanism outcome for these bids.
///
/// Buyers tied at zero surplus can be classified winner or loser depending
/// on which supported allocation is in force; a run that converged under
/// its own threaded allocation may therefore disagree with this canonical
/// reading. Use [`is_terminal_at`] to test against a specific outcome.
pub fn is_terminal(market: &Market, bids: &BidMatrix, policy: ResponsePolicy) -> bool {
    let Ok(outcome) = mechanism_outcome(bids, None, None) else {
        return false;
    };
    is_terminal_at(market, bids, policy, &outcome)
}

/// [`is_terminal`] against an explicit current outcome.
pub fn is_terminal_at(
    market: &Market,
    bids: &BidMatrix,
    policy: ResponsePolicy,
    outcome: &Outcome,
) -> bool {
    (0..market.n_real_buyers()).all(|buyer| {
        policy_response(market, bids, outcome, buyer, policy)
            .is_ok_and(|row| row.as_slice() == bids.row(buyer))
    })
}

/// Per-buyer improvement room: how far each real buyer's current utility
/// falls short of his best-response target, measured at the canonical
/// mechanism outcome. All entries within one increment of zero is the
/// operational stability certificate. As with [`is_terminal`], zero-surplus
/// ties make the classification outcome-dependent; use [`nash_gaps_at`] to
/// measure against a specific outcome.
pub fn nash_gaps(market: &Market, bids: &BidMatrix) -> Result<Vec<Money>> {
    let outcome = mechanism_outcome(bids, None, None)?;
    nash_gaps_at(market, bids, &outcome)
}

/// [`nash_gaps`] against an explicit current outcome.
pub fn nash_gaps_at(market: &Market, bids: &BidMatrix, outcome: &Outcome) -> Result<Vec<Money>> {
    let mut gaps = Vec::with_capacity(market.n_real_buyers());
    for buyer in 0..market.n_real_buyers() {
        let ctx = response_context(market, bids, outcome, buyer)?;
        let u = utility(market, outcome, buyer)?;
        let gap = match ctx.target_surplus {
            Some(d) => (d - u).max(Money::ZERO),
            None => Money::ZERO,
        };
        gaps.push(gap);
    }
    Ok(gaps)
}

/// Whether the maximum and minimum equilibrium prices of these bids agree
/// item by item up to one increment. Holds at every stable state of the
/// dynamics; the converse fails.
pub fn price_gap_within_epsilon(bids: &BidMatrix) -> bool {
    let lo = min_equilibrium(bids);
    let hi = max_equilibrium(bids);
    lo.prices.iter().zip(&hi.prices).all(|(&l, &h)| {
        let gap = h - l;
        gap == Money::ZERO || gap == Money::EPSILON
    })
}

/// Whether a converged run that started from aligned rows ended with
/// maximum equilibrium prices within one increment above the minimum
/// equilibrium prices at truthful bidding.
pub fn matches_truthful_min_prices(market: &Market, trace: &DynamicsTrace) -> Result<bool> {
    if trace.termination != Termination::Converged {
        return Err(MarketError::NotConverged);
    }
    for buyer in 0..market.n_real_buyers() {
        if !is_aligned(trace.initial_bids.row(buyer), market.value_row(buyer))? {
            return Err(MarketError::NotAligned { buyer });
        }
    }
    let truthful = min_equilibrium(&BidMatrix::truthful(market));
    Ok(trace
        .final_outcome
        .prices
        .iter()
        .zip(&truthful.prices)
        .all(|(&p, &p_star)| {
            let gap = p - p_star;
            gap == Money::ZERO || gap == Money::EPSILON
        }))
}

/// Whether a converged run's final allocation maximizes true social
/// welfare, checked against exhaustive matching search.
pub fn allocation_is_efficient(market: &Market, trace: &DynamicsTrace) -> Result<bool> {
    if trace.termination != Termination::Converged {
        return Err(MarketError::NotConverged);
    }
    let (_, best) = brute_max_weight_matching(market)?;
    let achieved = crate::market::social_welfare(market, &trace.final_outcome.allocation)?;
    Ok(achieved == best)
}
