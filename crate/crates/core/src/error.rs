use alloc::string::String;
use core::fmt;

use crate::market::TraderId;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// A caller broke an operation's contract (wrong role, unmatched trader, bad index).
    Contract(String),
    /// The instance does not satisfy a mechanism's modelling assumption.
    Precondition(String),
    /// The instance itself is malformed.
    InvalidInstance(String),
    UnknownTrader(TraderId),
    /// The exhaustive oracle refuses instances beyond its size bound.
    TooLarge {
        sellers: usize,
        buyers: usize,
        limit: usize,
    },
    /// A one-sided auction was fed a stream inconsistent with its configuration.
    Protocol(String),
    /// A seller could not be placed in any sub-market.
    Routing(String),
    Config(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Contract(m) => write!(f, "contract violation: {m}"),
            Error::Precondition(m) => write!(f, "precondition violated: {m}"),
            Error::InvalidInstance(m) => write!(f, "invalid instance: {m}"),
            Error::UnknownTrader(id) => write!(f, "unknown trader id {id}"),
            Error::TooLarge { sellers, buyers, limit } => write!(
                f,
                "instance too large for exact oracle: {sellers} sellers, {buyers} buyers (limit {limit} per side)"
            ),
            Error::Protocol(m) => write!(f, "auction protocol error: {m}"),
            Error::Routing(m) => write!(f, "routing error: {m}"),
            Error::Config(m) => write!(f, "configuration error: {m}"),
        }
    }
}

impl core::error::Error for Error {}
