//! Core market types: true valuations, reported bids, allocations and
//! priced outcomes.
//!
//! A market has `n` real unit-demand buyers and `m` indivisible items. One
//! dummy buyer per item (with all-zero values and bids) is appended at
//! construction time, so "item unsold" is represented uniformly as "sold to
//! a dummy at price zero" and every item can always be allocated.

use crate::error::{MarketError, Result};
use crate::money::Money;

/// A market instance: the true valuation matrix plus dummy buyers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Market {
    values: Vec<Vec<Money>>,
    n_real: usize,
    n_items: usize,
}

impl Market {
    /// Builds a market from the real buyers' valuation rows. One zero-value
    /// dummy row per item is appended; original buyer indices are preserved.
    pub fn new(values: Vec<Vec<Money>>) -> Result<Market> {
        let n_real = values.len();
        let n_items = values.first().map_or(0, Vec::len);
        for (i, row) in values.iter().enumerate() {
            if row.len() != n_items {
                return Err(MarketError::RaggedMatrix {
                    row: i,
                    got: row.len(),
                    expected: n_items,
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if v.is_negative() {
                    return Err(MarketError::NegativeValue { buyer: i, item: j });
                }
            }
        }
        let mut values = values;
        for _ in 0..n_items {
            values.push(vec![Money::ZERO; n_items]);
        }
        Ok(Market {
            values,
            n_real,
            n_items,
        })
    }

    /// Convenience constructor taking raw unit counts.
    pub fn from_units(values: &[Vec<i64>]) -> Result<Market> {
        Market::new(
            values
                .iter()
                .map(|row| row.iter().map(|&u| Money::from_units(u)).collect())
                .collect(),
        )
    }

    pub fn n_real_buyers(&self) -> usize {
        self.n_real
    }

    /// Total number of buyer rows, dummies included.
    pub fn n_buyers(&self) -> usize {
        self.values.len()
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    /// The money grid increment. All amounts are integer multiples of it.
    pub fn epsilon(&self) -> Money {
        Money::EPSILON
    }

    pub fn is_dummy(&self, buyer: usize) -> bool {
        buyer >= self.n_real
    }

    pub fn value(&self, buyer: usize, item: usize) -> Money {
        self.values[buyer][item]
    }

    pub fn value_row(&self, buyer: usize) -> &[Money] {
        &self.values[buyer]
    }

    pub fn max_value(&self) -> Money {
        self.values
            .iter()
            .flatten()
            .copied()
            .fold(Money::ZERO, Money::max)
    }

    fn check_buyer(&self, buyer: usize) -> Result<()> {
        if buyer >= self.n_buyers() {
            return Err(MarketError::BuyerOutOfRange {
                buyer,
                n_buyers: self.n_buyers(),
            });
        }
        Ok(())
    }
}

/// The chain family of markets: `n + 1` real buyers over `n` items where
/// buyer `k` wants items `k-1` and `k`, the first buyer wants only the first
/// item and the last buyer only the last.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChainVariant {
    /// Every desired pair is worth `n` epsilon, including the first buyer's.
    SmallPrices,
    /// As above, but the first buyer values the first item at one epsilon.
    LargePrices,
}

pub fn chain_market(n: usize, variant: ChainVariant) -> Result<Market> {
    if n == 0 {
        return Err(MarketError::EmptyChain);
    }
    let full = Money::from_units(n as i64);
    let first = match variant {
        ChainVariant::SmallPrices => full,
        ChainVariant::LargePrices => Money::EPSILON,
    };
    let mut rows = vec![vec![Money::ZERO; n]; n + 1];
    rows[0][0] = first;
    for k in 1..n {
        rows[k][k - 1] = full;
        rows[k][k] = full;
    }
    rows[n][n - 1] = full;
    Market::new(rows)
}

/// Reported bids, same shape as the market's value matrix (dummy rows are
/// identically zero) and capped entrywise by the true values.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BidMatrix {
    rows: Vec<Vec<Money>>,
    n_real: usize,
    n_items: usize,
}

impl BidMatrix {
    /// Builds a bid matrix from the real buyers' rows; dummy rows are filled
    /// with zeros. Validates `0 <= bid <= value` entrywise.
    pub fn new(market: &Market, real_rows: Vec<Vec<Money>>) -> Result<BidMatrix> {
        if real_rows.len() != market.n_real_buyers() {
            return Err(MarketError::ShapeMismatch {
                expected: market.n_real_buyers(),
                got: real_rows.len(),
            });
        }
        let mut rows = real_rows;
        for _ in 0..market.n_items() {
            rows.push(vec![Money::ZERO; market.n_items()]);
        }
        let bids = BidMatrix {
            rows,
            n_real: market.n_real_buyers(),
            n_items: market.n_items(),
        };
        bids.validate(market)?;
        Ok(bids)
    }

    pub fn truthful(market: &Market) -> BidMatrix {
        BidMatrix {
            rows: (0..market.n_buyers())
                .map(|i| market.value_row(i).to_vec())
                .collect(),
            n_real: market.n_real_buyers(),
            n_items: market.n_items(),
        }
    }

    fn validate(&self, market: &Market) -> Result<()> {
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != self.n_items {
                return Err(MarketError::RaggedMatrix {
                    row: i,
                    got: row.len(),
                    expected: self.n_items,
                });
            }
            for (j, &b) in row.iter().enumerate() {
                if b.is_negative() {
                    return Err(MarketError::NegativeBid { buyer: i, item: j });
                }
                if b > market.value(i, j) {
                    return Err(MarketError::BidAboveValue { buyer: i, item: j });
                }
            }
            if market.is_dummy(i) && row.iter().any(|&b| b != Money::ZERO) {
                return Err(MarketError::NonZeroDummyBid { buyer: i });
            }
        }
        Ok(())
    }

    pub fn n_buyers(&self) -> usize {
        self.rows.len()
    }

    pub fn n_real_buyers(&self) -> usize {
        self.n_real
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn is_dummy(&self, buyer: usize) -> bool {
        buyer >= self.n_real
    }

    pub fn bid(&self, buyer: usize, item: usize) -> Money {
        self.rows[buyer][item]
    }

    pub fn row(&self, buyer: usize) -> &[Money] {
        &self.rows[buyer]
    }

    pub fn max_bid(&self) -> Money {
        self.rows
            .iter()
            .flatten()
            .copied()
            .fold(Money::ZERO, Money::max)
    }

    /// Highest bid placed on one item.
    pub fn max_bid_on(&self, item: usize) -> Money {
        self.rows
            .iter()
            .map(|r| r[item])
            .fold(Money::ZERO, Money::max)
    }

    /// Returns a copy with `buyer`'s row replaced, re-validating the cap.
    pub fn with_row(&self, market: &Market, buyer: usize, row: Vec<Money>) -> Result<BidMatrix> {
        market.check_buyer(buyer)?;
        if row.len() != self.n_items {
            return Err(MarketError::ShapeMismatch {
                expected: self.n_items,
                got: row.len(),
            });
        }
        let mut next = self.clone();
        next.rows[buyer] = row;
        next.validate(market)?;
        Ok(next)
    }

    /// Returns a copy with `buyer`'s row set to all zeros.
    pub fn with_zeroed_row(&self, buyer: usize) -> BidMatrix {
        let mut next = self.clone();
        next.rows[buyer] = vec![Money::ZERO; self.n_items];
        next
    }
}

/// A partial matching of buyers to items. At most one buyer per item; a
/// buyer without an item is unallocated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Allocation {
    assigned: Vec<Option<usize>>,
    winners: Vec<Option<usize>>,
}

impl Allocation {
    pub fn new(assigned: Vec<Option<usize>>, n_items: usize) -> Result<Allocation> {
        let mut winners = vec![None; n_items];
        for (buyer, slot) in assigned.iter().enumerate() {
            if let Some(item) = *slot {
                if item >= n_items {
                    return Err(MarketError::ItemOutOfRange { item, n_items });
                }
                if winners[item].is_some() {
                    return Err(MarketError::NotAMatching { item });
                }
                winners[item] = Some(buyer);
            }
        }
        Ok(Allocation { assigned, winners })
    }

    pub fn empty(n_buyers: usize, n_items: usize) -> Allocation {
        Allocation {
            assigned: vec![None; n_buyers],
            winners: vec![None; n_items],
        }
    }

    pub fn n_buyers(&self) -> usize {
        self.assigned.len()
    }

    pub fn n_items(&self) -> usize {
        self.winners.len()
    }

    pub fn item_of(&self, buyer: usize) -> Option<usize> {
        self.assigned[buyer]
    }

    pub fn winner_of(&self, item: usize) -> Option<usize> {
        self.winners[item]
    }

    /// All (buyer, item) pairs in the matching, in buyer order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.assigned
            .iter()
            .enumerate()
            .filter_map(|(b, s)| s.map(|j| (b, j)))
    }
}

/// A price vector together with an allocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub prices: Vec<Money>,
    pub allocation: Allocation,
}

impl Outcome {
    pub fn new(prices: Vec<Money>, allocation: Allocation) -> Result<Outcome> {
        for (j, &p) in prices.iter().enumerate() {
            if p.is_negative() {
                return Err(MarketError::NegativePrice { item: j });
            }
        }
        if allocation.n_items() != prices.len() {
            return Err(MarketError::ShapeMismatch {
                expected: prices.len(),
                got: allocation.n_items(),
            });
        }
        Ok(Outcome { prices, allocation })
    }
}

/// The buyer's true payoff under an outcome: value minus price when
/// allocated, zero otherwise. Always measured against true values, never
/// against bids.
pub fn utility(market: &Market, outcome: &Outcome, buyer: usize) -> Result<Money> {
    market.check_buyer(buyer)?;
    Ok(match outcome.allocation.item_of(buyer) {
        Some(item) => market.value(buyer, item) - outcome.prices[item],
        None => Money::ZERO,
    })
}

/// Total true value captured by a matching. Dummies contribute zero.
pub fn social_welfare(market: &Market, allocation: &Allocation) -> Result<Money> {
    if allocation.n_buyers() != market.n_buyers() {
        return Err(MarketError::ShapeMismatch {
            expected: market.n_buyers(),
            got: allocation.n_buyers(),
        });
    }
    Ok(allocation
        .pairs()
        .map(|(buyer, item)| market.value(buyer, item))
        .sum())
}

/// Whether a bid row is the value row shifted down by one constant and
/// floored at zero. Such a row encodes the buyer's full preference order:
/// every positively-bid item carries the same value-minus-bid margin, and
/// every zero-bid item is worth no more than that margin.
pub fn is_aligned(bid_row: &[Money], value_row: &[Money]) -> Result<bool> {
    if bid_row.len() != value_row.len() {
        return Err(MarketError::ShapeMismatch {
            expected: value_row.len(),
            got: bid_row.len(),
        });
    }
    let mut margin: Option<Money> = None;
    for (&b, &v) in bid_row.iter().zip(value_row) {
        if b > Money::ZERO {
            let d = v - b;
            match margin {
                None => margin = Some(d),
                Some(m) if m != d => return Ok(false),
                Some(_) => {}
            }
        }
    }
    let Some(margin) = margin else {
        // All-zero row: any shift of at least the largest value produces it.
        return Ok(true);
    };
    for (&b, &v) in bid_row.iter().zip(value_row) {
        if b == Money::ZERO && v > margin {
            return Ok(false);
        }
    }
    Ok(true)
}
