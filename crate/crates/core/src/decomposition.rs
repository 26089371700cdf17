//! Market decomposition for sellers who are not patient.
//!
//! The horizon `[0, T]` is cut into `⌈2T/t⌉` consecutive sub-markets of
//! length `t/2`. Each seller goes to the latest sub-market she is active
//! over in full; each buyer is offered to every sub-market his window
//! overlaps, in order, until one of them matches him. The plugged mechanism
//! runs on each sub-market as a patient-seller market of its own.
//!
//! Window bounds are tracked in half ticks so odd `t` needs no rounding.
//! For buyer routing a window is half-open, `[start, end)`, except the last,
//! which is closed; a buyer arriving exactly on a boundary starts in the later
//! sub-market.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::market::{Instance, Matching, Outcome, TimePoint, TraderId, TraderType};
use crate::mechanism::{derive_seed, EventLog, Mechanism};
use crate::money::Money;

/// One slice of the horizon. Bounds are in half ticks: the window is
/// `[start2 / 2, end2 / 2]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubMarket {
    /// 1-based.
    pub index: u32,
    pub start2: u64,
    pub end2: u64,
    pub sellers: Vec<TraderType>,
    /// Every buyer whose window overlaps this sub-market, in arrival order.
    /// Buyers matched in an earlier sub-market are dropped when it runs.
    pub buyers: Vec<TraderType>,
}

impl SubMarket {
    /// First and last whole tick inside the window.
    pub fn ticks(&self) -> (TimePoint, TimePoint) {
        (TimePoint(self.start2.div_ceil(2)), TimePoint(self.end2 / 2))
    }

    /// `true` if `t` is active over the whole window.
    pub fn contained_in(&self, t: &TraderType) -> bool {
        2 * t.a.0 <= self.start2 && self.end2 <= 2 * t.d.0
    }

    fn admits_buyer(&self, b: &TraderType, last: bool) -> bool {
        let before_end = if last { 2 * b.a.0 <= self.end2 } else { 2 * b.a.0 < self.end2 };
        before_end && 2 * b.d.0 >= self.start2
    }

    /// The buyer's window cut down to this sub-market.
    fn clip(&self, b: &TraderType) -> TraderType {
        let (lo, hi) = self.ticks();
        b.with_window(b.a.max(lo), b.d.min(hi))
    }
}

pub fn submarket_count(horizon: TimePoint, t: TimePoint) -> Result<u32> {
    if t.0 == 0 {
        return Err(Error::Config("sub-market length t must be positive".into()));
    }
    let k = (2 * horizon.0).div_ceil(t.0).max(1);
    u32::try_from(k).map_err(|_| Error::Config(format!("{k} sub-markets is too many")))
}

/// Builds the sub-markets and routes every trader, before any matching.
pub fn plan(instance: &Instance, t: TimePoint) -> Result<Vec<SubMarket>> {
    let count = submarket_count(instance.horizon(), t)?;
    let horizon2 = 2 * instance.horizon().0;
    let mut subs: Vec<SubMarket> = (1..=count)
        .map(|k| SubMarket {
            index: k,
            start2: u64::from(k - 1) * t.0,
            end2: (u64::from(k) * t.0).min(horizon2),
            sellers: Vec::new(),
            buyers: Vec::new(),
        })
        .collect();

    for s in instance.sellers() {
        let Some(sub) = subs.iter_mut().rev().find(|m| m.contained_in(s)) else {
            return Err(Error::Routing(format!(
                "seller {} window [{}, {}] contains no sub-market of length {}/2",
                s.id, s.a, s.d, t
            )));
        };
        sub.sellers.push(*s);
    }
    let last = subs.len() - 1;
    for b in instance.buyers() {
        for (i, sub) in subs.iter_mut().enumerate() {
            if sub.admits_buyer(b, i == last) {
                sub.buyers.push(*b);
            }
        }
    }
    Ok(subs)
}

/// Runs `mechanism` on every sub-market in index order and merges the
/// results. Sub-market 1 uses `seed` itself; sub-market `k > 1` uses a seed
/// derived from `(seed, k)`.
pub fn decompose<M: Mechanism>(instance: &Instance, t: TimePoint, mechanism: &M, seed: u64) -> Result<Outcome> {
    decompose_logged(instance, t, mechanism, seed, &mut EventLog::new())
}

pub fn decompose_logged<M: Mechanism>(
    instance: &Instance,
    t: TimePoint,
    mechanism: &M,
    seed: u64,
    log: &mut EventLog,
) -> Result<Outcome> {
    let subs = plan(instance, t)?;
    let mut matched: BTreeSet<TraderId> = BTreeSet::new();
    let mut pairs = Vec::new();
    let mut payments = BTreeMap::new();

    for sub in &subs {
        let buyers: Vec<TraderType> =
            sub.buyers.iter().filter(|b| !matched.contains(&b.id)).map(|b| sub.clip(b)).collect();
        let local = Instance::new(sub.sellers.clone(), buyers, true, instance.horizon())?;
        let sub_seed = if sub.index == 1 { seed } else { derive_seed(seed, u64::from(sub.index)) };
        log.set_submarket(Some(sub.index));
        let out = mechanism.run_logged(&local, sub_seed, log);
        log.set_submarket(None);
        let out = out?;

        for &(ask, bid) in &out.matching.pairs {
            if !matched.insert(ask) || !matched.insert(bid) {
                return Err(Error::Contract(format!("pair ({ask}, {bid}) matched in two sub-markets")));
            }
            pairs.push((ask, bid));
            payments.insert(ask, out.payment(ask));
            payments.insert(bid, out.payment(bid));
        }
    }

    let mut matching = Matching::empty_for(instance);
    for (ask, bid) in pairs {
        matching.unmatched_asks.remove(&ask);
        matching.unmatched_bids.remove(&bid);
        matching.pairs.push((ask, bid));
    }
    Ok(Outcome::from_matching(instance, matching, payments))
}

/// `E_M`: a mechanism for patient sellers lifted to general markets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposed<M> {
    pub inner: M,
    pub t: TimePoint,
}

impl<M: Mechanism> Mechanism for Decomposed<M> {
    fn name(&self) -> String {
        format!("decomposed[{}, t={}]", self.inner.name(), self.t)
    }

    fn is_randomized(&self) -> bool {
        self.inner.is_randomized()
    }

    fn run_logged(&self, instance: &Instance, seed: u64, log: &mut EventLog) -> Result<Outcome> {
        decompose_logged(instance, self.t, &self.inner, seed, log)
    }
}

/// Shape of a rising market.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RisingParams {
    pub horizon: TimePoint,
    /// Seller lifetime; also the decomposition parameter. At least 2.
    pub t: TimePoint,
    pub sellers_per_submarket: usize,
    pub buyers_per_submarket: usize,
    /// Valuation range of sub-market 1.
    pub low: Money,
    pub high: Money,
    /// Added to both range ends for every later sub-market.
    pub drift: Money,
}

impl Default for RisingParams {
    fn default() -> Self {
        RisingParams {
            horizon: TimePoint(12),
            t: TimePoint(4),
            sellers_per_submarket: 2,
            buyers_per_submarket: 2,
            low: Money(1),
            high: Money(20),
            drift: Money(5),
        }
    }
}

/// A market whose valuations shift upwards by `drift` per sub-market.
/// Sellers live for `t` ticks (less near time 0) and end exactly where
/// their target sub-market ends, so each is routed to it. Buyers are active
/// for a single tick inside their sub-market. With odd `t` and a last window
/// shorter than one tick, the sellers meant for the window before it are
/// routed to the last one instead.
pub fn rising_market_scenario(seed: u64, params: &RisingParams) -> Result<Instance> {
    let RisingParams { horizon, t, low, high, drift, .. } = *params;
    if t.0 < 2 {
        return Err(Error::Config("rising market needs t >= 2".into()));
    }
    if low > high {
        return Err(Error::Config(format!("empty valuation range [{low}, {high}]")));
    }
    let count = submarket_count(horizon, t)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sellers = Vec::new();
    let mut buyers = Vec::new();
    let mut next_id = 1u32;
    for k in 0..u64::from(count) {
        let shift = drift.0 * k;
        let (lo, hi) = (low.0 + shift, high.0 + shift);
        let start2 = k * t.0;
        let end2 = ((k + 1) * t.0).min(2 * horizon.0);
        let d = end2.div_ceil(2);
        let a = d.saturating_sub(t.0);
        for _ in 0..params.sellers_per_submarket {
            sellers.push(TraderType::seller(next_id, rng.gen_range(lo..=hi), a, d));
            next_id += 1;
        }
        let first = start2.div_ceil(2);
        let last_open = if end2 == 2 * horizon.0 { end2 / 2 } else { end2.div_ceil(2) - 1 };
        for _ in 0..params.buyers_per_submarket {
            let at = rng.gen_range(first..=last_open.max(first));
            buyers.push(TraderType::buyer(next_id, rng.gen_range(lo..=hi), at, at));
            next_id += 1;
        }
    }
    buyers.sort_by_key(|b| b.a);
    Instance::new(sellers, buyers, false, horizon)
}
