//! Enumerate the Pareto frontier of a house allocation instance by inverting
//! Top Trading Cycles.
//!
//! TTC maps every initial endowment to a Pareto-optimal allocation, and every
//! PO allocation is reached this way. [`enumerator::itea`] walks the `n!`
//! endowments, runs TTC once per new outcome, and removes that outcome's
//! whole preimage ([`inverse::invttc`]) from further consideration.
//! [`enumerator::brute_force_frontier`] is the exhaustive baseline.

pub mod bench;
pub mod enumerator;
pub mod error;
pub mod instances;
pub mod inverse;
pub mod model;
pub mod selection;
pub mod ttc;

#[cfg(test)]
pub(crate) mod testing;

pub use enumerator::{
    brute_force_frontier, brute_force_frontier_with, itea, itea_with, verify_partition,
    EnumOptions, EnumStats, Frontier,
};
pub use error::{Error, Result};
pub use instances::{random_profile, Format, InstanceFile};
pub use inverse::{devour, dressup, invttc, Preimage};
pub use model::{
    rank_allocation, unrank_allocation, validate_profile, Allocation, AllocationRank,
    PreferenceProfile, Tag, TaggedState,
};
pub use selection::{score, select_best, Criterion};
pub use ttc::{forward_ttc, is_po_bruteforce, is_po_fixedpoint, ttc_outcome, TtcTrace};
