//! Demand graphs and alternating-path closures.
//!
//! The demand graph links each buyer to exactly the items that give him
//! maximal nonnegative bid surplus at the current prices. Alternating-path
//! closures over it drive both equilibrium solvers: prices of a whole
//! closure move together, and a "critical" path certifies that they can
//! move no further in that direction.

use crate::market::{Allocation, BidMatrix};
use crate::money::Money;

/// Bipartite graph of utility-maximizing (buyer, item) pairs at given bids
/// and prices. Depends only on bids and prices, never on an allocation.
#[derive(Clone, Debug)]
pub struct DemandGraph {
    items_of: Vec<Vec<usize>>,
    buyers_of: Vec<Vec<usize>>,
}

impl DemandGraph {
    pub fn items_of(&self, buyer: usize) -> &[usize] {
        &self.items_of[buyer]
    }

    pub fn buyers_of(&self, item: usize) -> &[usize] {
        &self.buyers_of[item]
    }

    pub fn has_edge(&self, buyer: usize, item: usize) -> bool {
        self.items_of[buyer].contains(&item)
    }
}

/// Best bid surplus of a buyer over all items, or `None` for an empty market.
pub fn best_surplus(bids: &BidMatrix, prices: &[Money], buyer: usize) -> Option<Money> {
    bids.row(buyer)
        .iter()
        .zip(prices)
        .map(|(&b, &p)| b - p)
        .max()
}

/// Builds the demand graph: `(i, j)` is an edge when `b[i][j] >= p[j]` and
/// item `j` attains buyer `i`'s maximal surplus.
pub fn demand_graph(bids: &BidMatrix, prices: &[Money]) -> DemandGraph {
    assert_eq!(bids.n_items(), prices.len(), "price vector shape mismatch");
    let n = bids.n_buyers();
    let m = bids.n_items();
    let mut items_of = vec![Vec::new(); n];
    let mut buyers_of = vec![Vec::new(); m];
    for i in 0..n {
        let Some(s) = best_surplus(bids, prices, i) else {
            continue;
        };
        if s.is_negative() {
            // every bid is below its price; the buyer demands nothing
            continue;
        }
        for j in 0..m {
            if bids.bid(i, j) - prices[j] == s {
                items_of[i].push(j);
                buyers_of[j].push(i);
            }
        }
    }
    DemandGraph {
        items_of,
        buyers_of,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlternatingKind {
    /// Paths leave an item through its allocated edge and leave a buyer
    /// through his other demand edges. Used when raising prices.
    Max,
    /// Paths leave an item through non-allocated demand edges and leave a
    /// buyer through his allocated edge. Used when lowering prices.
    Min,
}

/// The set of vertices reachable from a root item through alternating
/// paths, with parent links for path reconstruction.
#[derive(Clone, Debug)]
pub struct AlternatingSubgraph {
    pub kind: AlternatingKind,
    pub root: usize,
    items: Vec<usize>,
    buyers: Vec<usize>,
    item_in: Vec<bool>,
    buyer_in: Vec<bool>,
    parent_item_of_buyer: Vec<Option<usize>>,
    parent_buyer_of_item: Vec<Option<usize>>,
}

impl AlternatingSubgraph {
    /// Reached items in BFS order; the root comes first.
    pub fn items(&self) -> &[usize] {
        &self.items
    }

    /// Reached buyers in BFS order.
    pub fn buyers(&self) -> &[usize] {
        &self.buyers
    }

    pub fn contains_item(&self, item: usize) -> bool {
        self.item_in[item]
    }

    pub fn contains_buyer(&self, buyer: usize) -> bool {
        self.buyer_in[buyer]
    }

    /// The item through which a reached buyer entered the subgraph.
    pub fn entry_item(&self, buyer: usize) -> Option<usize> {
        self.parent_item_of_buyer[buyer]
    }

    fn path_to(&self, buyer: usize) -> Vec<PathStep> {
        let mut steps = Vec::new();
        let mut b = buyer;
        loop {
            let item = self.parent_item_of_buyer[b].expect("reached buyer has an entry item");
            steps.push(PathStep { item, buyer: b });
            match self.parent_buyer_of_item[item] {
                Some(prev) => b = prev,
                None => break,
            }
        }
        steps.reverse();
        steps
    }
}

/// One (item, buyer) hop of an alternating path, starting at the root item.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PathStep {
    pub item: usize,
    pub buyer: usize,
}

/// Closure used when raising prices: from each reached item follow its
/// winner, from each reached buyer follow all of his demand edges.
pub fn max_alternating_subgraph(
    bids: &BidMatrix,
    prices: &[Money],
    allocation: &Allocation,
    root: usize,
) -> AlternatingSubgraph {
    let graph = demand_graph(bids, prices);
    let mut sub = new_subgraph(AlternatingKind::Max, root, bids.n_buyers(), bids.n_items());
    let mut queue = vec![root];
    while let Some(item) = queue.pop() {
        let Some(winner) = allocation.winner_of(item) else {
            continue;
        };
        if sub.buyer_in[winner] {
            continue;
        }
        sub.buyer_in[winner] = true;
        sub.parent_item_of_buyer[winner] = Some(item);
        sub.buyers.push(winner);
        for &next in graph.items_of(winner) {
            if !sub.item_in[next] {
                sub.item_in[next] = true;
                sub.parent_buyer_of_item[next] = Some(winner);
                sub.items.push(next);
                queue.push(next);
            }
        }
    }
    sub
}

/// Closure used when lowering prices: from each reached item follow every
/// demander other than its winner, from each reached buyer follow his
/// allocated item.
pub fn min_alternating_subgraph(
    bids: &BidMatrix,
    prices: &[Money],
    allocation: &Allocation,
    root: usize,
) -> AlternatingSubgraph {
    let graph = demand_graph(bids, prices);
    let mut sub = new_subgraph(AlternatingKind::Min, root, bids.n_buyers(), bids.n_items());
    let mut queue = vec![root];
    while let Some(item) = queue.pop() {
        for &buyer in graph.buyers_of(item) {
            if allocation.item_of(buyer) == Some(item) || sub.buyer_in[buyer] {
                continue;
            }
            sub.buyer_in[buyer] = true;
            sub.parent_item_of_buyer[buyer] = Some(item);
            sub.buyers.push(buyer);
            if let Some(own) = allocation.item_of(buyer) {
                if !sub.item_in[own] {
                    sub.item_in[own] = true;
                    sub.parent_buyer_of_item[own] = Some(buyer);
                    sub.items.push(own);
                    queue.push(own);
                }
            }
        }
    }
    sub
}

fn new_subgraph(
    kind: AlternatingKind,
    root: usize,
    n_buyers: usize,
    n_items: usize,
) -> AlternatingSubgraph {
    let mut item_in = vec![false; n_items];
    item_in[root] = true;
    AlternatingSubgraph {
        kind,
        root,
        items: vec![root],
        buyers: Vec::new(),
        item_in,
        buyer_in: vec![false; n_buyers],
        parent_item_of_buyer: vec![None; n_buyers],
        parent_buyer_of_item: vec![None; n_items],
    }
}

/// In a max closure, a critical path ends at a reached winner whose bid on
/// his own item equals its price; that tightness is what stops the whole
/// closure's prices from rising. Returns the first such path, or `None`.
pub fn find_critical_max_path(
    sub: &AlternatingSubgraph,
    bids: &BidMatrix,
    prices: &[Money],
) -> Option<Vec<PathStep>> {
    debug_assert_eq!(sub.kind, AlternatingKind::Max);
    for &buyer in &sub.buyers {
        let item = sub.parent_item_of_buyer[buyer].expect("reached via item");
        if bids.bid(buyer, item) == prices[item] {
            return Some(sub.path_to(buyer));
        }
    }
    None
}

/// In a min closure, a critical path ends at a reached unallocated buyer
/// bidding exactly the price of the item he was reached through; lowering
/// that price would make him strictly demand it while staying unallocated.
pub fn find_critical_min_path(
    sub: &AlternatingSubgraph,
    bids: &BidMatrix,
    prices: &[Money],
    allocation: &Allocation,
) -> Option<Vec<PathStep>> {
    debug_assert_eq!(sub.kind, AlternatingKind::Min);
    for &buyer in &sub.buyers {
        if allocation.item_of(buyer).is_some() {
            continue;
        }
        let item = sub.parent_item_of_buyer[buyer].expect("reached via item");
        if bids.bid(buyer, item) == prices[item] {
            return Some(sub.path_to(buyer));
        }
    }
    None
}
