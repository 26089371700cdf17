//! Online double auctions: the greedy mechanism with critical-value payments,
//! double auctions reduced from one-sided online auctions, the market
//! decomposition for impatient sellers, and the machinery to check
//! truthfulness and competitive ratios empirically.
//!
//! All money is integer minor units and all times are integer ticks.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod decomposition;
pub mod error;
pub mod greedy;
pub mod harness;
pub mod market;
pub mod mechanism;
pub mod money;
pub mod onesided;
pub mod oracle;
pub mod reduction;

pub use decomposition::{decompose, Decomposed};
pub use error::{Error, Result};
pub use greedy::{run_greedy, Greedy};
pub use market::{
    check_feasibility, deficit, matchable, social_welfare, utility, validate_misreport, Allocation, Instance, Matching,
    Outcome, Role, TimePoint, TraderId, TraderType,
};
pub use mechanism::{EventKind, EventLog, Mechanism};
pub use money::{ExtendedMoney, Money, SignedMoney};
pub use oracle::{optimal_general, optimal_patient, OracleResult};
pub use reduction::{PositionSampler, Reduction};
