//! Assignment-market machinery: exact grid money, competitive-equilibrium
//! computation via alternating-path closures, best-response bidding
//! dynamics under the maximum-equilibrium mechanism, and a brute-force
//! oracle for certifying both at desk scale.
//!
//! ```
//! use matchmarket::{
//!     max_equilibrium, min_equilibrium, run_dynamics, BidMatrix, Market, Money,
//!     MoveOrdering, ResponsePolicy, Termination,
//! };
//!
//! // three buyers, two items, truthful bids
//! let market = Market::from_units(&[vec![10, 6], vec![8, 4], vec![3, 2]]).unwrap();
//! let bids = BidMatrix::truthful(&market);
//!
//! let lo = min_equilibrium(&bids);
//! let hi = max_equilibrium(&bids);
//! assert_eq!(lo.prices, vec![Money::from_units(6), Money::from_units(2)]);
//! assert_eq!(hi.prices, vec![Money::from_units(8), Money::from_units(4)]);
//!
//! // buyers rebid until nobody wants to move; prices settle within one
//! // increment of the truthful minimum
//! let trace = run_dynamics(&market, &bids, ResponsePolicy::Aligned,
//!     &MoveOrdering::RoundRobin, 1000).unwrap();
//! assert_eq!(trace.termination, Termination::Converged);
//! assert!(trace.final_outcome.prices[0] <= Money::from_units(7));
//! ```

mod error;
mod matching;
mod money;

pub mod demand;
pub mod dynamics;
pub mod equilibrium;
pub mod market;
pub mod oracle;

pub use error::{MarketError, Result};
pub use money::Money;

pub use demand::{
    best_surplus, demand_graph, find_critical_max_path, find_critical_min_path,
    max_alternating_subgraph, min_alternating_subgraph, AlternatingKind, AlternatingSubgraph,
    DemandGraph, PathStep,
};
pub use dynamics::{
    allocation_is_efficient, default_step_budget, is_terminal, is_terminal_at, loser_best_response,
    matches_truthful_min_prices, mechanism_outcome, nash_gaps, nash_gaps_at,
    price_gap_within_epsilon, response_context, run_dynamics, step, winner_best_response,
    zero_fill_best_response, DynamicsStep, DynamicsTrace, MoveOrdering, ResponseContext,
    ResponsePolicy, Termination,
};
pub use equilibrium::{
    check_equilibrium, is_competitive_equilibrium, max_equilibrium, min_equilibrium,
    raise_to_max_equilibrium, raise_to_max_equilibrium_with_scan, select_allocation,
    EquilibriumViolation,
};
pub use market::{
    chain_market, is_aligned, social_welfare, utility, Allocation, BidMatrix, ChainVariant, Market,
    Outcome,
};
pub use oracle::{
    brute_best_response_utility, brute_equilibrium_prices, brute_max_weight_matching,
    enumerate_supported_allocations, supported_allocations_no_free_lunch, OracleBudget,
};
