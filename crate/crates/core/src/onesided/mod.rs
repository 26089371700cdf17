//! Truthful online one-sided auctions with critical-value payments.
//!
//! An auction is told the stream length `n` and capacity `k` up front, then
//! decides on each input as it arrives. Every implementation here is
//! monotone in the offered valuation once its randomness is pinned, and
//! charges each winner the lowest report that would still have won.

mod ksecretary;
mod secretary;

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::money::Money;

pub use ksecretary::KSecretary;
pub use secretary::{sample_size, SingleSecretary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OneSidedDecision {
    pub selected: bool,
    /// Present iff `selected`.
    pub payment: Option<Money>,
}

impl OneSidedDecision {
    pub const REJECT: OneSidedDecision = OneSidedDecision { selected: false, payment: None };

    pub fn select(payment: Money) -> Self {
        OneSidedDecision { selected: true, payment: Some(payment) }
    }
}

/// How the k-secretary draws its first-half sizes.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum SplitRule {
    #[default]
    Binomial,
    /// Test hook: the first-half size at recursion depth `i` is `sizes[i]`
    /// (clamped to the stream length); deeper levels fall back to binomial draws.
    Pinned(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuctionConfig {
    /// Stream length, known in advance.
    pub n: usize,
    /// Number of items.
    pub k: usize,
    /// Seed of the auction's private random stream.
    pub seed: u64,
    pub splits: SplitRule,
}

impl AuctionConfig {
    pub fn new(n: usize, k: usize, seed: u64) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::Config(format!("auction capacity k = {k} must satisfy 1 <= k <= n = {n}")));
        }
        Ok(AuctionConfig { n, k, seed, splits: SplitRule::Binomial })
    }

    pub fn with_splits(mut self, splits: SplitRule) -> Self {
        self.splits = splits;
        self
    }
}

/// One running auction. Inputs must be offered exactly `n` times, then
/// [`finish`](OnlineAuction::finish) confirms the stream was complete.
pub trait OnlineAuction {
    fn offer(&mut self, value: Money) -> Result<OneSidedDecision>;

    fn finish(&mut self) -> Result<()>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AuctionKind {
    /// Classic single-item secretary; requires `k = 1`.
    Secretary,
    /// Recursive k-choice secretary.
    KSecretary,
}

impl AuctionKind {
    pub fn start(self, config: &AuctionConfig) -> Result<Box<dyn OnlineAuction>> {
        match self {
            AuctionKind::Secretary => {
                if config.k != 1 {
                    return Err(Error::Config(format!("single-item secretary needs k = 1, got {}", config.k)));
                }
                Ok(Box::new(SingleSecretary::new(config.n)))
            }
            AuctionKind::KSecretary => Ok(Box::new(KSecretary::new(config)?)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AuctionKind::Secretary => "secretary",
            AuctionKind::KSecretary => "k-secretary",
        }
    }
}

/// Runs an auction over a complete stream.
pub fn run_stream(kind: AuctionKind, values: &[Money], config: &AuctionConfig) -> Result<Vec<OneSidedDecision>> {
    let mut auction = kind.start(config)?;
    let decisions = values.iter().map(|&v| auction.offer(v)).collect::<Result<Vec<_>>>()?;
    auction.finish()?;
    Ok(decisions)
}

pub fn secretary_single(values: &[Money], config: &AuctionConfig) -> Result<Vec<OneSidedDecision>> {
    run_stream(AuctionKind::Secretary, values, config)
}

pub fn secretary_k(values: &[Money], config: &AuctionConfig) -> Result<Vec<OneSidedDecision>> {
    run_stream(AuctionKind::KSecretary, values, config)
}

/// Replays the auction with the input at `index` re-reported, holding all
/// randomness and every other report fixed, and checks that its payment is
/// the critical value: every report below it loses and every report above it
/// wins. Losers pass vacuously.
pub fn critical_payment_check(
    kind: AuctionKind,
    values: &[Money],
    config: &AuctionConfig,
    index: usize,
) -> Result<bool> {
    let decisions = run_stream(kind, values, config)?;
    let Some(decision) = decisions.get(index) else {
        return Err(Error::Contract(format!("index {index} outside stream of {}", values.len())));
    };
    let Some(pay) = decision.payment.filter(|_| decision.selected) else {
        return Ok(true);
    };
    let mut stream = values.to_vec();
    let mut wins = |r: u64| -> Result<bool> {
        stream[index] = Money(r);
        Ok(run_stream(kind, &stream, config)?[index].selected)
    };

    let p = pay.0;
    let v = values[index].0;
    let mut probes: Vec<u64> =
        [0, 1, p / 2, p.saturating_sub(1), p, p + 1, p + 2, 2 * p + 1, v, v / 2, 2 * v + 1].into();
    probes.sort_unstable();
    probes.dedup();
    for r in probes {
        let w = wins(r)?;
        if (r < p && w) || (r > p && !w) {
            return Ok(false);
        }
    }

    // Smallest winning report over [0, hi]; it must sit at p or p + 1.
    let (mut lo, mut hi) = (0u64, v.max(p + 1));
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if wins(mid)? {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(lo == p || lo == p + 1)
}
