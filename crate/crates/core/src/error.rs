use thiserror::Error;

/// Errors produced by market construction, the equilibrium engine, the
/// dynamics runner and the brute-force oracle.
#[derive(Debug, Error)]
pub enum MarketError {
    #[error("value for buyer {buyer}, item {item} is negative")]
    NegativeValue { buyer: usize, item: usize },
    #[error("row {row} has {got} entries, expected {expected}")]
    RaggedMatrix {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("bid for buyer {buyer}, item {item} is negative")]
    NegativeBid { buyer: usize, item: usize },
    #[error("bid for buyer {buyer}, item {item} exceeds the buyer's value")]
    BidAboveValue { buyer: usize, item: usize },
    #[error("dummy buyer {buyer} must bid zero everywhere")]
    NonZeroDummyBid { buyer: usize },
    #[error("buyer index {buyer} out of range ({n_buyers} buyers)")]
    BuyerOutOfRange { buyer: usize, n_buyers: usize },
    #[error("item index {item} out of range ({n_items} items)")]
    ItemOutOfRange { item: usize, n_items: usize },
    #[error("expected {expected} entries, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("allocation assigns item {item} to more than one buyer")]
    NotAMatching { item: usize },
    #[error("price of item {item} is negative")]
    NegativePrice { item: usize },
    #[error("starting outcome is not a competitive equilibrium: {detail}")]
    NotAnEquilibrium { detail: String },
    #[error("no allocation supports the given price vector")]
    NoSupportingAllocation,
    #[error("buyer {buyer} is allocated an item; expected an unallocated buyer")]
    BuyerAllocated { buyer: usize },
    #[error("buyer {buyer} is unallocated; expected a winner")]
    BuyerUnallocated { buyer: usize },
    #[error("buyer {buyer} is not a real buyer")]
    NotARealBuyer { buyer: usize },
    #[error("ordering refers to buyer {buyer}, but there are {n_real} real buyers")]
    InvalidOrdering { buyer: usize, n_real: usize },
    #[error("ordering list is empty")]
    EmptyOrdering,
    #[error("step budget must be at least 1")]
    ZeroStepBudget,
    #[error("instance exceeds the oracle budget: {reason}")]
    BudgetExceeded { reason: String },
    #[error("dynamics run did not converge")]
    NotConverged,
    #[error("initial bid row of buyer {buyer} is not aligned")]
    NotAligned { buyer: usize },
    #[error("chain market needs at least one item")]
    EmptyChain,
}

pub type Result<T> = std::result::Result<T, MarketError>;
