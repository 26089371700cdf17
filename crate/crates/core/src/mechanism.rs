//! The common interface every double-auction mechanism in this crate
//! implements, and the per-run event log.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::Result;
use crate::market::{Instance, Outcome, TimePoint, TraderId};
use crate::money::Money;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    BidArrive,
    /// An input was offered to the plugged one-sided auction and selected.
    Select,
    Match,
    Reject,
    Payment,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::BidArrive => "bid-arrive",
            EventKind::Select => "select",
            EventKind::Match => "match",
            EventKind::Reject => "reject",
            EventKind::Payment => "payment",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub time: TimePoint,
    pub kind: EventKind,
    pub ids: Vec<TraderId>,
    pub money: Option<Money>,
    /// 1-based sub-market index when running under market decomposition.
    pub submarket: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventLog {
    pub events: Vec<Event>,
    submarket: Option<u32>,
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, time: TimePoint, kind: EventKind, ids: &[TraderId], money: Option<Money>) {
        self.events.push(Event { time, kind, ids: ids.to_vec(), money, submarket: self.submarket });
    }

    pub(crate) fn set_submarket(&mut self, k: Option<u32>) {
        self.submarket = k;
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn of_kind(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }
}

/// A double-auction mechanism `(π, x)`.
///
/// `seed` pins all internal randomness: two calls with the same instance and
/// seed return identical outcomes, and calls that differ only in one trader's
/// report share every random draw (common random numbers).
pub trait Mechanism {
    fn name(&self) -> String;

    fn is_randomized(&self) -> bool;

    fn run_logged(&self, instance: &Instance, seed: u64, log: &mut EventLog) -> Result<Outcome>;

    fn run(&self, instance: &Instance, seed: u64) -> Result<Outcome> {
        self.run_logged(instance, seed, &mut EventLog::new())
    }
}

impl<M: Mechanism + ?Sized> Mechanism for &M {
    fn name(&self) -> String {
        (**self).name()
    }

    fn is_randomized(&self) -> bool {
        (**self).is_randomized()
    }

    fn run_logged(&self, instance: &Instance, seed: u64, log: &mut EventLog) -> Result<Outcome> {
        (**self).run_logged(instance, seed, log)
    }
}

impl<M: Mechanism + ?Sized> Mechanism for Box<M> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn is_randomized(&self) -> bool {
        (**self).is_randomized()
    }

    fn run_logged(&self, instance: &Instance, seed: u64, log: &mut EventLog) -> Result<Outcome> {
        (**self).run_logged(instance, seed, log)
    }
}

/// SplitMix64 finaliser, used to derive independent seeds and tie-break keys.
pub fn mix_seed(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for stream `index` under `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix_seed(mix_seed(master) ^ index.wrapping_mul(0xd605_bbb5_8c8a_bbd5))
}
