//! Structural invariants checked over generated inputs.

use matchmarket::{
    is_aligned, loser_best_response, mechanism_outcome, social_welfare, utility,
    winner_best_response, Allocation, BidMatrix, Market, Money,
};
use proptest::prelude::*;

/// Value matrix paired with a bid matrix capped entrywise by it.
fn market_with_bids() -> impl Strategy<Value = (Market, BidMatrix)> {
    (1usize..=3, 1usize..=4)
        .prop_flat_map(|(m, n)| {
            proptest::collection::vec(
                proptest::collection::vec((0i64..=8).prop_flat_map(|v| (Just(v), 0i64..=8)), m),
                n,
            )
        })
        .prop_map(|cells| {
            let values: Vec<Vec<Money>> = cells
                .iter()
                .map(|row| row.iter().map(|&(v, _)| Money::from_units(v)).collect())
                .collect();
            let market = Market::new(values).unwrap();
            let bids: Vec<Vec<Money>> = cells
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|&(v, b)| Money::from_units(b.min(v)))
                        .collect()
                })
                .collect();
            let bids = BidMatrix::new(&market, bids).unwrap();
            (market, bids)
        })
}

proptest! {
    #[test]
    fn truthful_rows_are_aligned((market, _) in market_with_bids()) {
        let truthful = BidMatrix::truthful(&market);
        for b in 0..market.n_buyers() {
            prop_assert!(is_aligned(truthful.row(b), market.value_row(b)).unwrap());
        }
    }

    #[test]
    fn unallocated_buyers_earn_exactly_zero((market, bids) in market_with_bids()) {
        let outcome = mechanism_outcome(&bids, None, None).unwrap();
        for b in 0..market.n_buyers() {
            if outcome.allocation.item_of(b).is_none() {
                prop_assert_eq!(utility(&market, &outcome, b).unwrap(), Money::ZERO);
            }
        }
    }

    #[test]
    fn welfare_adds_over_disjoint_buyer_sets((market, bids) in market_with_bids()) {
        let outcome = mechanism_outcome(&bids, None, None).unwrap();
        let alloc = &outcome.allocation;
        let total = social_welfare(&market, alloc).unwrap();
        // split buyers by parity and recombine
        let split = |keep_even: bool| {
            let assigned = (0..market.n_buyers())
                .map(|b| {
                    if (b % 2 == 0) == keep_even {
                        alloc.item_of(b)
                    } else {
                        None
                    }
                })
                .collect();
            Allocation::new(assigned, market.n_items()).unwrap()
        };
        let evens = social_welfare(&market, &split(true)).unwrap();
        let odds = social_welfare(&market, &split(false)).unwrap();
        prop_assert_eq!(total, evens + odds);
    }

    #[test]
    fn policy_rows_stay_aligned_and_capped((market, bids) in market_with_bids()) {
        let outcome = mechanism_outcome(&bids, None, None).unwrap();
        for buyer in 0..market.n_real_buyers() {
            let row = if outcome.allocation.item_of(buyer).is_some() {
                winner_best_response(&market, &bids, &outcome, buyer).unwrap()
            } else {
                loser_best_response(&market, &bids, &outcome, buyer).unwrap()
            };
            if row.as_slice() == bids.row(buyer) {
                continue; // unchanged rows were not emitted by the formula
            }
            prop_assert!(is_aligned(&row, market.value_row(buyer)).unwrap());
            for (j, &b) in row.iter().enumerate() {
                prop_assert!(b >= Money::ZERO);
                prop_assert!(b <= market.value(buyer, j));
            }
        }
    }

    #[test]
    fn mechanism_outcomes_are_equilibria((_, bids) in market_with_bids()) {
        let outcome = mechanism_outcome(&bids, None, None).unwrap();
        prop_assert!(matchmarket::is_competitive_equilibrium(&bids, &outcome));
        // every item is formally matched; dummies absorb the leftovers
        for item in 0..bids.n_items() {
            prop_assert!(outcome.allocation.winner_of(item).is_some());
        }
    }
}
