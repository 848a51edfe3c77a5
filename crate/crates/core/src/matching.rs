//! Maximum-weight bipartite matching used to seed the equilibrium solvers.

use crate::market::BidMatrix;

/// Matches every item to a distinct buyer so that total bid weight is
/// maximal. Dummy rows guarantee at least as many buyers as items, and all
/// bids are nonnegative, so an item-perfect matching is always optimal.
///
/// Shortest-augmenting-path assignment with integer potentials; exact on
/// the money grid. Returns the winning buyer per item.
pub(crate) fn max_weight_item_matching(bids: &BidMatrix) -> Vec<usize> {
    let m = bids.n_items();
    let n = bids.n_buyers();
    assert!(m <= n, "dummy augmentation guarantees items <= buyers");
    if m == 0 {
        return Vec::new();
    }
    let inf = i64::MAX / 4;
    // 1-based potentials; index 0 is the virtual start column.
    let mut u = vec![0i64; m + 1];
    let mut v = vec![0i64; n + 1];
    let mut way = vec![0usize; n + 1];
    // matched[buyer] = item currently assigned, 0 when free
    let mut matched = vec![0usize; n + 1];
    for item in 1..=m {
        matched[0] = item;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cost = -bids.bid(j - 1, i0 - 1).units();
                let cur = cost - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched[j0] = matched[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut winner_of = vec![usize::MAX; m];
    for j in 1..=n {
        if matched[j] != 0 {
            winner_of[matched[j] - 1] = j - 1;
        }
    }
    debug_assert!(winner_of.iter().all(|&w| w != usize::MAX));
    winner_of
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::Market;
    use crate::money::Money;

    fn weight(bids: &BidMatrix, winner_of: &[usize]) -> i64 {
        winner_of
            .iter()
            .enumerate()
            .map(|(j, &i)| bids.bid(i, j).units())
            .sum()
    }

    #[test]
    fn picks_the_heavier_assignment() {
        // 12+15 pattern: pairing buyer 1 with item 0 and buyer 2 with item 1
        // is worth 17, beating 2+15 or 12+5.
        let market = Market::from_units(&[vec![2, 0], vec![12, 15], vec![0, 5]]).unwrap();
        let bids = BidMatrix::new(
            &market,
            vec![
                vec![Money::from_units(2), Money::ZERO],
                vec![Money::from_units(12), Money::from_units(14)],
                vec![Money::ZERO, Money::from_units(5)],
            ],
        )
        .unwrap();
        let w = max_weight_item_matching(&bids);
        assert_eq!(weight(&bids, &w), 17);
        assert_eq!(w, vec![1, 2]);
    }

    #[test]
    fn dummies_absorb_unwanted_items() {
        let market = Market::from_units(&[vec![7, 0]]).unwrap();
        let bids = BidMatrix::truthful(&market);
        let w = max_weight_item_matching(&bids);
        assert_eq!(w[0], 0);
        assert!(market.is_dummy(w[1]));
    }

    #[test]
    fn distinct_winners_always() {
        let market = Market::from_units(&[vec![5, 5, 5], vec![5, 5, 5], vec![5, 5, 5]]).unwrap();
        let bids = BidMatrix::truthful(&market);
        let w = max_weight_item_matching(&bids);
        let mut sorted = w.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 3);
        assert_eq!(weight(&bids, &w), 15);
    }
}
