use matchmarket::{BidMatrix, Market, Money};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Desk-scale random market: up to `max_items` items, `max_real` buyers,
/// values on `0..=max_value` grid units.
pub fn random_market(
    rng: &mut ChaCha8Rng,
    max_items: usize,
    max_real: usize,
    max_value: i64,
) -> Market {
    let m = rng.gen_range(1..=max_items);
    let n = rng.gen_range(1..=max_real);
    let rows: Vec<Vec<i64>> = (0..n)
        .map(|_| (0..m).map(|_| rng.gen_range(0..=max_value)).collect())
        .collect();
    Market::from_units(&rows).unwrap()
}

/// Uniform random bids capped by the true values.
pub fn random_bids(rng: &mut ChaCha8Rng, market: &Market) -> BidMatrix {
    let rows: Vec<Vec<Money>> = (0..market.n_real_buyers())
        .map(|i| {
            (0..market.n_items())
                .map(|j| Money::from_units(rng.gen_range(0..=market.value(i, j).units())))
                .collect()
        })
        .collect();
    BidMatrix::new(market, rows).unwrap()
}

/// Random aligned bids: each row is the value row shifted down by a random
/// constant and floored at zero.
#[allow(dead_code)]
pub fn random_aligned_bids(rng: &mut ChaCha8Rng, market: &Market) -> BidMatrix {
    let rows: Vec<Vec<Money>> = (0..market.n_real_buyers())
        .map(|i| {
            let top = market
                .value_row(i)
                .iter()
                .map(|v| v.units())
                .max()
                .unwrap_or(0);
            let shift = rng.gen_range(0..=top);
            (0..market.n_items())
                .map(|j| Money::from_units((market.value(i, j).units() - shift).max(0)))
                .collect()
        })
        .collect();
    BidMatrix::new(market, rows).unwrap()
}
