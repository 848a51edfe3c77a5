//! Brute-force ground truth for desk-scale instances.
//!
//! Everything here is exhaustive: prices are enumerated over the whole
//! money grid, matchings over all assignments, deviations over all capped
//! bid rows. Slow by design, independent of the engine's algorithms, and
//! used to certify them.

use crate::equilibrium::is_competitive_equilibrium;
use crate::error::{MarketError, Result};
use crate::market::{Allocation, BidMatrix, Market, Outcome};
use crate::money::Money;

const MAX_STATES: u64 = 10_000_000;

/// Enumeration limits. The defaults cover the randomized test regime.
#[derive(Clone, Debug)]
pub struct OracleBudget {
    pub max_items: usize,
    pub max_real_buyers: usize,
    /// Optional global cap on enumerated prices; otherwise each item's grid
    /// stops at its highest bid, above which no equilibrium can price it.
    pub price_cap: Option<Money>,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_items: 3,
            max_real_buyers: 4,
            price_cap: None,
        }
    }
}

fn price_grid_caps(bids: &BidMatrix, budget: &OracleBudget) -> Result<Vec<i64>> {
    if bids.n_items() > budget.max_items {
        return Err(MarketError::BudgetExceeded {
            reason: format!(
                "{} items exceed the limit of {}",
                bids.n_items(),
                budget.max_items
            ),
        });
    }
    if bids.n_real_buyers() > budget.max_real_buyers {
        return Err(MarketError::BudgetExceeded {
            reason: format!(
                "{} real buyers exceed the limit of {}",
                bids.n_real_buyers(),
                budget.max_real_buyers
            ),
        });
    }
    let caps: Vec<i64> = (0..bids.n_items())
        .map(|j| {
            let cap = bids.max_bid_on(j);
            budget.price_cap.map_or(cap, |c| cap.min(c)).units()
        })
        .collect();
    let states: u64 = caps.iter().map(|&c| c as u64 + 1).product();
    if states > MAX_STATES {
        return Err(MarketError::BudgetExceeded {
            reason: format!("{states} grid states exceed the limit of {MAX_STATES}"),
        });
    }
    Ok(caps)
}

/// Best bid surplus per buyer, `None` when there are no items.
fn surpluses(bids: &BidMatrix, prices: &[Money]) -> Vec<Option<Money>> {
    (0..bids.n_buyers())
        .map(|i| bids.row(i).iter().zip(prices).map(|(&b, &p)| b - p).max())
        .collect()
}

/// Whether some matching turns the price vector into a competitive
/// equilibrium: every positively priced item needs an eligible real
/// winner, every buyer with positive surplus needs an item.
fn has_supporting_matching(bids: &BidMatrix, prices: &[Money]) -> bool {
    let s = surpluses(bids, prices);
    let mut used = vec![false; bids.n_real_buyers()];
    fn rec(
        bids: &BidMatrix,
        prices: &[Money],
        s: &[Option<Money>],
        used: &mut [bool],
        item: usize,
    ) -> bool {
        if item == bids.n_items() {
            return (0..bids.n_real_buyers())
                .all(|i| used[i] || !s[i].is_some_and(|v| v > Money::ZERO));
        }
        for i in 0..bids.n_real_buyers() {
            if used[i] {
                continue;
            }
            let hurdle = s[i].expect("items exist").max(Money::ZERO);
            if bids.bid(i, item) - prices[item] == hurdle {
                used[i] = true;
                if rec(bids, prices, s, used, item + 1) {
                    return true;
                }
                used[i] = false;
            }
        }
        if prices[item] == Money::ZERO && rec(bids, prices, s, used, item + 1) {
            return true;
        }
        false
    }
    rec(bids, prices, &s, &mut used, 0)
}

/// Enumerates every price vector on the grid and returns the entrywise
/// minimum and maximum over those supporting an equilibrium. Both extremes
/// are verified to qualify themselves.
pub fn brute_equilibrium_prices(
    bids: &BidMatrix,
    budget: &OracleBudget,
) -> Result<(Vec<Money>, Vec<Money>)> {
    let caps = price_grid_caps(bids, budget)?;
    let m = caps.len();
    let mut lo: Option<Vec<i64>> = None;
    let mut hi: Option<Vec<i64>> = None;
    let mut point = vec![0i64; m];
    loop {
        let prices: Vec<Money> = point.iter().map(|&u| Money::from_units(u)).collect();
        if has_supporting_matching(bids, &prices) {
            match (&mut lo, &mut hi) {
                (Some(lo), Some(hi)) => {
                    for j in 0..m {
                        lo[j] = lo[j].min(point[j]);
                        hi[j] = hi[j].max(point[j]);
                    }
                }
                _ => {
                    lo = Some(point.clone());
                    hi = Some(point.clone());
                }
            }
        }
        // odometer increment
        let mut j = 0;
        loop {
            if j == m {
                break;
            }
            point[j] += 1;
            if point[j] <= caps[j] {
                break;
            }
            point[j] = 0;
            j += 1;
        }
        if j == m {
            break;
        }
    }
    let lo = lo.expect("a competitive equilibrium always exists");
    let hi = hi.expect("a competitive equilibrium always exists");
    let lo: Vec<Money> = lo.into_iter().map(Money::from_units).collect();
    let hi: Vec<Money> = hi.into_iter().map(Money::from_units).collect();
    assert!(
        has_supporting_matching(bids, &lo),
        "entrywise minimum must itself qualify"
    );
    assert!(
        has_supporting_matching(bids, &hi),
        "entrywise maximum must itself qualify"
    );
    Ok((lo, hi))
}

/// Exhaustive maximum-weight matching over the true values. Ties break
/// toward the lexicographically smallest assignment vector.
pub fn brute_max_weight_matching(market: &Market) -> Result<(Allocation, Money)> {
    let n_real = market.n_real_buyers();
    let m = market.n_items();
    let states = ((n_real + 1) as u64).checked_pow(m as u32);
    match states {
        Some(s) if s <= MAX_STATES => {}
        _ => {
            return Err(MarketError::BudgetExceeded {
                reason: format!("matching search space exceeds {MAX_STATES} states"),
            })
        }
    }
    let mut best: Option<(Money, Vec<Option<usize>>)> = None;
    let mut winner_of: Vec<Option<usize>> = vec![None; m];
    let mut taken = vec![false; n_real];
    fn rec(
        market: &Market,
        item: usize,
        winner_of: &mut Vec<Option<usize>>,
        taken: &mut Vec<bool>,
        best: &mut Option<(Money, Vec<Option<usize>>)>,
    ) {
        let m = market.n_items();
        if item == m {
            let welfare: Money = winner_of
                .iter()
                .enumerate()
                .filter_map(|(j, w)| w.map(|i| market.value(i, j)))
                .sum();
            let mut assigned = vec![None; market.n_buyers()];
            for (j, w) in winner_of.iter().enumerate() {
                if let Some(i) = *w {
                    assigned[i] = Some(j);
                }
            }
            let better = match best {
                None => true,
                Some((w, a)) => welfare > *w || (welfare == *w && assigned < *a),
            };
            if better {
                *best = Some((welfare, assigned));
            }
            return;
        }
        winner_of[item] = None;
        rec(market, item + 1, winner_of, taken, best);
        for i in 0..market.n_real_buyers() {
            if taken[i] {
                continue;
            }
            taken[i] = true;
            winner_of[item] = Some(i);
            rec(market, item + 1, winner_of, taken, best);
            winner_of[item] = None;
            taken[i] = false;
        }
    }
    rec(market, 0, &mut winner_of, &mut taken, &mut best);
    let (welfare, assigned) = best.expect("the empty matching always exists");
    Ok((Allocation::new(assigned, m)?, welfare))
}

/// All matchings of items to real buyers that make the price vector a
/// competitive equilibrium. Items without a real winner are left unsold
/// (equivalently, absorbed by a dummy at price zero). Empty when the
/// prices are not an equilibrium price vector.
pub fn enumerate_supported_allocations(bids: &BidMatrix, prices: &[Money]) -> Vec<Allocation> {
    let m = bids.n_items();
    let s = surpluses(bids, prices);
    let mut out = Vec::new();
    let mut winner_of: Vec<Option<usize>> = vec![None; m];
    let mut taken = vec![false; bids.n_real_buyers()];
    fn rec(
        bids: &BidMatrix,
        prices: &[Money],
        s: &[Option<Money>],
        item: usize,
        winner_of: &mut Vec<Option<usize>>,
        taken: &mut Vec<bool>,
        out: &mut Vec<Allocation>,
    ) {
        let m = bids.n_items();
        if item == m {
            let mut assigned = vec![None; bids.n_buyers()];
            for (j, w) in winner_of.iter().enumerate() {
                if let Some(i) = *w {
                    assigned[i] = Some(j);
                }
            }
            let allocation = Allocation::new(assigned, m).expect("distinct winners");
            let outcome = Outcome {
                prices: prices.to_vec(),
                allocation,
            };
            if is_competitive_equilibrium(bids, &outcome) {
                out.push(outcome.allocation);
            }
            return;
        }
        for i in 0..bids.n_real_buyers() {
            if taken[i] {
                continue;
            }
            let hurdle = s[i].expect("items exist").max(Money::ZERO);
            if bids.bid(i, item) - prices[item] == hurdle {
                taken[i] = true;
                winner_of[item] = Some(i);
                rec(bids, prices, s, item + 1, winner_of, taken, out);
                winner_of[item] = None;
                taken[i] = false;
            }
        }
        rec_skip(bids, prices, s, item, winner_of, taken, out);
    }
    fn rec_skip(
        bids: &BidMatrix,
        prices: &[Money],
        s: &[Option<Money>],
        item: usize,
        winner_of: &mut Vec<Option<usize>>,
        taken: &mut Vec<bool>,
        out: &mut Vec<Allocation>,
    ) {
        if prices[item] == Money::ZERO {
            rec(bids, prices, s, item + 1, winner_of, taken, out);
        }
    }
    if m == 0 {
        let allocation = Allocation::empty(bids.n_buyers(), 0);
        let outcome = Outcome {
            prices: Vec::new(),
            allocation,
        };
        if is_competitive_equilibrium(bids, &outcome) {
            out.push(outcome.allocation);
        }
        return out;
    }
    rec(bids, prices, &s, 0, &mut winner_of, &mut taken, &mut out);
    out
}

/// Supported allocations the mechanism can actually realize: a real buyer
/// never wins an item he bid zero on (the dummy takes it instead).
pub fn supported_allocations_no_free_lunch(bids: &BidMatrix, prices: &[Money]) -> Vec<Allocation> {
    enumerate_supported_allocations(bids, prices)
        .into_iter()
        .filter(|alloc| {
            alloc
                .pairs()
                .all(|(i, j)| bids.is_dummy(i) || bids.bid(i, j) > Money::ZERO)
        })
        .collect()
}

/// Exhaustive best-response value: over every capped deviation row, the
/// worst true utility across the realizable supported allocations at the
/// resulting maximum equilibrium prices; returns the best such guarantee.
pub fn brute_best_response_utility(
    market: &Market,
    bids: &BidMatrix,
    buyer: usize,
    budget: &OracleBudget,
) -> Result<Money> {
    if buyer >= market.n_real_buyers() {
        return Err(MarketError::NotARealBuyer { buyer });
    }
    let m = market.n_items();
    let caps: Vec<i64> = (0..m).map(|j| market.value(buyer, j).units()).collect();
    let states: u64 = caps.iter().map(|&c| c as u64 + 1).product();
    if states > MAX_STATES {
        return Err(MarketError::BudgetExceeded {
            reason: format!("{states} deviation rows exceed the limit of {MAX_STATES}"),
        });
    }
    let mut best: Option<Money> = None;
    let mut row_units = vec![0i64; m];
    loop {
        let row: Vec<Money> = row_units.iter().map(|&u| Money::from_units(u)).collect();
        let deviated = bids.with_row(market, buyer, row)?;
        let (_, max_prices) = brute_equilibrium_prices(&deviated, budget)?;
        let allocations = supported_allocations_no_free_lunch(&deviated, &max_prices);
        assert!(
            !allocations.is_empty(),
            "maximum equilibrium prices always have a realizable allocation"
        );
        let worst = allocations
            .iter()
            .map(|alloc| match alloc.item_of(buyer) {
                Some(j) => market.value(buyer, j) - max_prices[j],
                None => Money::ZERO,
            })
            .min()
            .expect("nonempty");
        best = Some(best.map_or(worst, |b| b.max(worst)));
        let mut j = 0;
        loop {
            if j == m {
                break;
            }
            row_units[j] += 1;
            if row_units[j] <= caps[j] {
                break;
            }
            row_units[j] = 0;
            j += 1;
        }
        if j == m {
            break;
        }
    }
    Ok(best.unwrap_or(Money::ZERO))
}
