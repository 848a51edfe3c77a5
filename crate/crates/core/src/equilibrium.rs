//! Competitive-equilibrium verification and the combinatorial computation
//! of minimum and maximum equilibrium price vectors.
//!
//! Prices move in exact grid steps: each round jumps directly to the next
//! event (a bid becoming tight or a new demand edge appearing) instead of
//! crawling one increment at a time.

use std::fmt;

use crate::demand::{
    best_surplus, demand_graph, find_critical_max_path, find_critical_min_path,
    max_alternating_subgraph, min_alternating_subgraph, DemandGraph,
};
use crate::error::{MarketError, Result};
use crate::market::{Allocation, BidMatrix, Outcome};
use crate::matching::max_weight_item_matching;
use crate::money::Money;

/// One way an outcome fails to be a competitive equilibrium for the bids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EquilibriumViolation {
    /// An item nobody (or only a dummy) won carries a positive price.
    UnsoldItemPriced { item: usize },
    /// A winner pays more than he bid.
    NegativeSurplus { buyer: usize, item: usize },
    /// A winner would get strictly more bid surplus from another item.
    WinnerEnvies {
        buyer: usize,
        has: usize,
        wants: usize,
    },
    /// An unallocated buyer bids strictly above some price.
    LoserOverbids { buyer: usize, item: usize },
}

impl fmt::Display for EquilibriumViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EquilibriumViolation::UnsoldItemPriced { item } => {
                write!(f, "item {item} is unsold but carries a positive price")
            }
            EquilibriumViolation::NegativeSurplus { buyer, item } => {
                write!(f, "buyer {buyer} pays more than his bid on item {item}")
            }
            EquilibriumViolation::WinnerEnvies { buyer, has, wants } => {
                write!(f, "buyer {buyer} holds item {has} but prefers item {wants}")
            }
            EquilibriumViolation::LoserOverbids { buyer, item } => {
                write!(
                    f,
                    "unallocated buyer {buyer} bids above the price of item {item}"
                )
            }
        }
    }
}

/// Checks the outcome against the bid matrix: every positively priced item
/// must be sold to a real buyer, and every buyer must weakly prefer his own
/// assignment at the given prices. Returns all violations found.
pub fn check_equilibrium(bids: &BidMatrix, outcome: &Outcome) -> Result<Vec<EquilibriumViolation>> {
    let n = bids.n_buyers();
    let m = bids.n_items();
    if outcome.allocation.n_buyers() != n {
        return Err(MarketError::ShapeMismatch {
            expected: n,
            got: outcome.allocation.n_buyers(),
        });
    }
    if outcome.prices.len() != m {
        return Err(MarketError::ShapeMismatch {
            expected: m,
            got: outcome.prices.len(),
        });
    }
    let mut violations = Vec::new();
    for item in 0..m {
        let sold_to_real = outcome
            .allocation
            .winner_of(item)
            .is_some_and(|w| !bids.is_dummy(w));
        if !sold_to_real && outcome.prices[item] > Money::ZERO {
            violations.push(EquilibriumViolation::UnsoldItemPriced { item });
        }
    }
    for buyer in 0..n {
        match outcome.allocation.item_of(buyer) {
            Some(own) => {
                let surplus = bids.bid(buyer, own) - outcome.prices[own];
                if surplus.is_negative() {
                    violations.push(EquilibriumViolation::NegativeSurplus { buyer, item: own });
                }
                for j in 0..m {
                    if bids.bid(buyer, j) - outcome.prices[j] > surplus {
                        violations.push(EquilibriumViolation::WinnerEnvies {
                            buyer,
                            has: own,
                            wants: j,
                        });
                    }
                }
            }
            None => {
                for j in 0..m {
                    if bids.bid(buyer, j) > outcome.prices[j] {
                        violations.push(EquilibriumViolation::LoserOverbids { buyer, item: j });
                    }
                }
            }
        }
    }
    Ok(violations)
}

/// True when the outcome is a competitive equilibrium for the bids.
pub fn is_competitive_equilibrium(bids: &BidMatrix, outcome: &Outcome) -> bool {
    check_equilibrium(bids, outcome).is_ok_and(|v| v.is_empty())
}

/// Largest price vector supporting a fixed item-perfect matching, found by
/// relaxing the winners' indifference constraints downward from their bids.
/// Feasibility is guaranteed because the matching has maximum bid weight.
fn greatest_supporting_prices(bids: &BidMatrix, winner_of: &[usize]) -> Vec<Money> {
    let m = winner_of.len();
    let mut prices: Vec<Money> = (0..m).map(|j| bids.bid(winner_of[j], j)).collect();
    for pass in 0.. {
        let mut changed = false;
        for j in 0..m {
            let winner = winner_of[j];
            for j2 in 0..m {
                if j2 == j {
                    continue;
                }
                let cap = prices[j2] + bids.bid(winner, j) - bids.bid(winner, j2);
                if cap < prices[j] {
                    prices[j] = cap;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
        assert!(
            pass <= m + 1,
            "supporting-price relaxation failed to settle"
        );
    }
    prices
}

/// Lowers prices of whole min-closures until every item is free, pinned by
/// a tight unallocated bid, or grouped with an item already at zero.
fn descend_prices(bids: &BidMatrix, prices: &mut [Money], allocation: &Allocation) {
    let n = bids.n_buyers();
    let m = bids.n_items();
    'outer: loop {
        for root in 0..m {
            if prices[root] == Money::ZERO {
                continue;
            }
            let sub = min_alternating_subgraph(bids, prices, allocation, root);
            if find_critical_min_path(&sub, bids, prices, allocation).is_some() {
                continue;
            }
            let floor = sub
                .items()
                .iter()
                .map(|&j| prices[j])
                .min()
                .expect("closure contains the root");
            if floor == Money::ZERO {
                continue;
            }
            let mut step = floor;
            for buyer in 0..n {
                if sub.contains_buyer(buyer) {
                    continue;
                }
                let own = allocation.item_of(buyer);
                if own.is_some_and(|x| sub.contains_item(x)) {
                    continue;
                }
                // Surplus this outsider would need inside the closure before
                // gaining a demand edge into it.
                let toward = sub
                    .items()
                    .iter()
                    .map(|&j| bids.bid(buyer, j) - prices[j])
                    .max()
                    .expect("closure contains the root");
                let anchor = match own {
                    Some(x) => bids.bid(buyer, x) - prices[x],
                    None => Money::ZERO,
                };
                let gap = anchor - toward;
                debug_assert!(gap > Money::ZERO, "outsiders hold no edge into the closure");
                step = step.min(gap);
            }
            debug_assert!(step > Money::ZERO);
            for &j in sub.items() {
                prices[j] -= step;
            }
            continue 'outer;
        }
        break;
    }
}

/// Raises prices of whole max-closures until every item's closure holds a
/// bid-tight winner. Runs over a fixed item scan order; the resulting price
/// vector is the same for every order.
fn ascend_prices(bids: &BidMatrix, prices: &mut [Money], allocation: &Allocation, scan: &[usize]) {
    let m = bids.n_items();
    'outer: loop {
        for &root in scan {
            if allocation.winner_of(root).is_none() {
                // an unsold item stays at price zero
                continue;
            }
            let sub = max_alternating_subgraph(bids, prices, allocation, root);
            if find_critical_max_path(&sub, bids, prices).is_some() {
                continue;
            }
            let mut step: Option<Money> = None;
            for &buyer in sub.buyers() {
                let own = allocation
                    .item_of(buyer)
                    .expect("max closures reach winners only");
                let slack = bids.bid(buyer, own) - prices[own];
                step = Some(step.map_or(slack, |s| s.min(slack)));
                for j in 0..m {
                    if sub.contains_item(j) {
                        continue;
                    }
                    let gap = slack - (bids.bid(buyer, j) - prices[j]);
                    debug_assert!(gap > Money::ZERO, "outside ties belong in the closure");
                    step = Some(step.map_or(gap, |s| s.min(gap)));
                }
            }
            let step = step.expect("closure with a sold root reaches its winner");
            debug_assert!(step > Money::ZERO);
            for &j in sub.items() {
                prices[j] += step;
            }
            continue 'outer;
        }
        break;
    }
}

/// Raises prices from an arbitrary competitive equilibrium to the unique
/// maximum equilibrium price vector, keeping the allocation fixed.
pub fn raise_to_max_equilibrium(bids: &BidMatrix, start: &Outcome) -> Result<Outcome> {
    let scan: Vec<usize> = (0..bids.n_items()).collect();
    raise_to_max_equilibrium_with_scan(bids, start, &scan)
}

/// As [`raise_to_max_equilibrium`], but processing closures in the given
/// item order. The final prices are order-independent; exposing the order
/// lets tests assert that.
pub fn raise_to_max_equilibrium_with_scan(
    bids: &BidMatrix,
    start: &Outcome,
    scan: &[usize],
) -> Result<Outcome> {
    let m = bids.n_items();
    if scan.len() != m || (0..m).any(|j| !scan.contains(&j)) {
        return Err(MarketError::ShapeMismatch {
            expected: m,
            got: scan.len(),
        });
    }
    let violations = check_equilibrium(bids, start)?;
    if let Some(first) = violations.first() {
        return Err(MarketError::NotAnEquilibrium {
            detail: first.to_string(),
        });
    }
    let mut prices = start.prices.clone();
    ascend_prices(bids, &mut prices, &start.allocation, scan);
    Ok(Outcome {
        prices,
        allocation: start.allocation.clone(),
    })
}

/// Computes the minimum competitive equilibrium: a maximum-bid-weight
/// matching plus the unique smallest supporting price vector, reached by
/// lowering closure prices from an initial supporting vector.
pub fn min_equilibrium(bids: &BidMatrix) -> Outcome {
    let n = bids.n_buyers();
    let m = bids.n_items();
    if m == 0 {
        return Outcome {
            prices: Vec::new(),
            allocation: Allocation::empty(n, 0),
        };
    }
    let winner_of = max_weight_item_matching(bids);
    let mut prices = greatest_supporting_prices(bids, &winner_of);
    let mut assigned = vec![None; n];
    for (j, &w) in winner_of.iter().enumerate() {
        assigned[w] = Some(j);
    }
    let matching = Allocation::new(assigned, m).expect("winners are distinct");
    debug_assert!(
        is_competitive_equilibrium(
            bids,
            &Outcome {
                prices: prices.clone(),
                allocation: matching.clone()
            }
        ),
        "supporting prices must form an equilibrium"
    );
    descend_prices(bids, &mut prices, &matching);
    let allocation = select_allocation(bids, &prices, None, None)
        .expect("minimum equilibrium prices support an allocation");
    Outcome { prices, allocation }
}

/// Computes the maximum competitive equilibrium by raising prices from the
/// minimum one.
pub fn max_equilibrium(bids: &BidMatrix) -> Outcome {
    let start = min_equilibrium(bids);
    raise_to_max_equilibrium(bids, &start).expect("minimum equilibrium is an equilibrium")
}

/// Deterministic supported allocation for an equilibrium price vector.
///
/// Still-valid previous assignments are kept, every positively priced item
/// is sold, real buyers never win on a zero bid (a dummy takes the item
/// instead), and the mover gets the lowest priority everywhere: he is left
/// out whenever the rest of the market can cover the requirements, and
/// otherwise takes whatever his rivals spare.
pub fn select_allocation(
    bids: &BidMatrix,
    prices: &[Money],
    previous: Option<&Allocation>,
    mover: Option<usize>,
) -> Result<Allocation> {
    let n = bids.n_buyers();
    let m = bids.n_items();
    if prices.len() != m {
        return Err(MarketError::ShapeMismatch {
            expected: m,
            got: prices.len(),
        });
    }
    for (item, &p) in prices.iter().enumerate() {
        if p.is_negative() {
            return Err(MarketError::NegativePrice { item });
        }
    }
    if let Some(mv) = mover {
        if mv >= n {
            return Err(MarketError::BuyerOutOfRange {
                buyer: mv,
                n_buyers: n,
            });
        }
    }
    if let Some(prev) = previous {
        if prev.n_buyers() != n || prev.n_items() != m {
            return Err(MarketError::ShapeMismatch {
                expected: n,
                got: prev.n_buyers(),
            });
        }
    }

    let graph = demand_graph(bids, prices);
    let required: Vec<bool> = (0..n)
        .map(|i| {
            !bids.is_dummy(i) && best_surplus(bids, prices, i).is_some_and(|s| s > Money::ZERO)
        })
        .collect();
    let mut builder = AllocationBuilder {
        bids,
        prices,
        graph,
        required,
        mover,
        item_of: vec![None; n],
        winner_of: vec![None; m],
    };

    if let Some(prev) = previous {
        for (i, j) in prev.pairs() {
            if Some(i) == mover {
                continue;
            }
            if builder.eligible(i, j) && builder.winner_of[j].is_none() {
                builder.assign(i, j);
            }
        }
    }
    for buyer in 0..n {
        if Some(buyer) == mover || !builder.required[buyer] || builder.item_of[buyer].is_some() {
            continue;
        }
        if !builder.place_buyer(buyer, false) {
            return Err(MarketError::NoSupportingAllocation);
        }
    }
    // Cover positively priced items without the mover first, so he joins
    // only where every completion needs him; that keeps seeds intact and
    // leaves him out whenever the rest of the market suffices.
    for item in 0..m {
        if prices[item] > Money::ZERO && builder.winner_of[item].is_none() {
            builder.place_item(item, false);
        }
    }
    for item in 0..m {
        if prices[item] > Money::ZERO && builder.winner_of[item].is_none()
            && !builder.place_item(item, true) {
                return Err(MarketError::NoSupportingAllocation);
            }
    }
    if let Some(mv) = mover {
        if builder.required[mv] && builder.item_of[mv].is_none() {
            // the mover scans items in reverse so incumbents keep earlier ones
            if !builder.place_buyer(mv, true) {
                return Err(MarketError::NoSupportingAllocation);
            }
        }
    }
    let mut next_dummy = bids.n_real_buyers();
    for item in 0..m {
        if builder.winner_of[item].is_some() {
            continue;
        }
        debug_assert_eq!(prices[item], Money::ZERO);
        while builder.item_of[next_dummy].is_some() {
            next_dummy += 1;
        }
        builder.assign(next_dummy, item);
    }

    let allocation = Allocation::new(builder.item_of, m)?;
    debug_assert!(
        is_competitive_equilibrium(
            bids,
            &Outcome {
                prices: prices.to_vec(),
                allocation: allocation.clone()
            }
        ),
        "selected allocation must support the prices"
    );
    Ok(allocation)
}

struct AllocationBuilder<'a> {
    bids: &'a BidMatrix,
    prices: &'a [Money],
    graph: DemandGraph,
    required: Vec<bool>,
    mover: Option<usize>,
    item_of: Vec<Option<usize>>,
    winner_of: Vec<Option<usize>>,
}

impl AllocationBuilder<'_> {
    /// Demand edges a buyer may actually win through: real buyers never win
    /// on a zero bid.
    fn eligible(&self, buyer: usize, item: usize) -> bool {
        self.graph.has_edge(buyer, item)
            && !(!self.bids.is_dummy(buyer) && self.bids.bid(buyer, item) == Money::ZERO)
    }

    fn assign(&mut self, buyer: usize, item: usize) {
        self.item_of[buyer] = Some(item);
        self.winner_of[item] = Some(buyer);
    }

    fn place_buyer(&mut self, buyer: usize, reverse: bool) -> bool {
        // settle on a free item when one exists before displacing anyone
        let m = self.prices.len();
        let scan: Vec<usize> = if reverse {
            (0..m).rev().collect()
        } else {
            (0..m).collect()
        };
        for &item in &scan {
            if self.eligible(buyer, item) && self.winner_of[item].is_none() {
                self.assign(buyer, item);
                return true;
            }
        }
        let mut visited = vec![false; m];
        self.try_buyer(buyer, &scan, &mut visited)
    }

    fn try_buyer(&mut self, buyer: usize, scan: &[usize], visited: &mut [bool]) -> bool {
        let m = self.prices.len();
        let forward: Vec<usize> = (0..m).collect();
        for &item in scan {
            if visited[item] || !self.eligible(buyer, item) {
                continue;
            }
            visited[item] = true;
            match self.winner_of[item] {
                None => {
                    self.assign(buyer, item);
                    return true;
                }
                Some(holder) => {
                    if self.try_buyer(holder, &forward, visited) {
                        self.assign(buyer, item);
                        return true;
                    }
                    if !self.required[holder] {
                        // zero-surplus holders may legally end up unallocated
                        self.item_of[holder] = None;
                        self.assign(buyer, item);
                        return true;
                    }
                }
            }
        }
        false
    }

    fn place_item(&mut self, item: usize, with_mover: bool) -> bool {
        let mut visited = vec![false; self.item_of.len()];
        self.try_item(item, with_mover, &mut visited)
    }

    fn try_item(&mut self, item: usize, with_mover: bool, visited: &mut [bool]) -> bool {
        let n = self.item_of.len();
        // Once the mover is provably unavoidable he takes the gap himself
        // rather than displacing an incumbent into it.
        let mut candidates: Vec<usize> = Vec::with_capacity(n);
        if with_mover {
            candidates.extend(self.mover);
        }
        candidates.extend((0..n).filter(|&i| Some(i) != self.mover));
        for buyer in candidates {
            if visited[buyer] || !self.eligible(buyer, item) {
                continue;
            }
            visited[buyer] = true;
            match self.item_of[buyer] {
                None => {
                    self.assign(buyer, item);
                    return true;
                }
                Some(held) => {
                    if self.prices[held] == Money::ZERO {
                        // a free item may fall back to a dummy later
                        self.winner_of[held] = None;
                        self.assign(buyer, item);
                        return true;
                    }
                    self.winner_of[held] = None;
                    self.item_of[buyer] = None;
                    if self.try_item(held, with_mover, visited) {
                        self.assign(buyer, item);
                        return true;
                    }
                    self.winner_of[held] = Some(buyer);
                    self.item_of[buyer] = Some(held);
                }
            }
        }
        false
    }
}
