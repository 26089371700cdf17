//! Double auctions built from a one-sided online auction.
//!
//! Asks are given synthetic positions among the bids, the merged stream is
//! fed to the one-sided auction, and every selected bid takes the lowest
//! currently unmatched ask (seeded tie-break) if it values the item at least
//! as much. Asks the
//! auction selects merely use up its capacity; they stay available for
//! matching. Sellers are paid by the greedy rule over the resulting matching,
//! where only bids the auction selected count as unmatched bids.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::greedy::{tie_key, PaymentContext};
use crate::market::{social_welfare, Instance, Matching, Outcome, TimePoint, TraderId};
use crate::mechanism::{derive_seed, EventKind, EventLog, Mechanism};
use crate::money::Money;
use crate::onesided::{AuctionConfig, AuctionKind, OneSidedDecision};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PositionSampler {
    /// Every interleaving of asks among bids equally likely.
    UniformRandom,
    /// Ask `i` (in seller listing order) arrives right after the
    /// `(positions[i] − 1)`-th input; positions are 1-based.
    FixedPositions(Vec<usize>),
    /// All asks ahead of all bids.
    FrontLoaded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StreamKind {
    Ask,
    Bid,
}

/// Asks and bids in the order the one-sided auction sees them. Bids keep
/// their arrival order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergedStream {
    pub entries: Vec<(StreamKind, TraderId)>,
}

impl MergedStream {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn bids(&self) -> impl Iterator<Item = TraderId> + '_ {
        self.entries.iter().filter(|(k, _)| *k == StreamKind::Bid).map(|(_, id)| *id)
    }
}

pub fn sample_positions(instance: &Instance, sampler: &PositionSampler, rng: &mut impl Rng) -> Result<MergedStream> {
    if !instance.patient_sellers() {
        return Err(Error::Precondition("position sampling requires patient sellers".into()));
    }
    let asks: Vec<TraderId> =
        instance.sellers().iter().filter(|s| instance.seller_is_patient(s)).map(|s| s.id).collect();
    let bids: Vec<TraderId> = instance.buyers().iter().map(|b| b.id).collect();
    let total = asks.len() + bids.len();

    let entries = match sampler {
        PositionSampler::UniformRandom => {
            let mut slots: Vec<StreamKind> =
                asks.iter().map(|_| StreamKind::Ask).chain(bids.iter().map(|_| StreamKind::Bid)).collect();
            slots.shuffle(rng);
            let mut ask_order = asks;
            ask_order.shuffle(rng);
            let (mut ai, mut bi) = (ask_order.into_iter(), bids.into_iter());
            slots
                .into_iter()
                .map(|k| match k {
                    StreamKind::Ask => (k, ai.next().expect("slot count matches asks")),
                    StreamKind::Bid => (k, bi.next().expect("slot count matches bids")),
                })
                .collect()
        }
        PositionSampler::FrontLoaded => {
            let positions = alloc::vec![1; asks.len()];
            interleave(&asks, &bids, &positions, rng)
        }
        PositionSampler::FixedPositions(positions) => {
            if positions.len() != asks.len() {
                return Err(Error::Config(format!("{} fixed positions for {} asks", positions.len(), asks.len())));
            }
            if let Some(p) = positions.iter().find(|&&p| p == 0 || p > total) {
                return Err(Error::Config(format!("fixed position {p} outside [1, {total}]")));
            }
            interleave(&asks, &bids, positions, rng)
        }
    };
    Ok(MergedStream { entries })
}

/// Places each ask right after the `(l − 1)`-th input; asks sharing a
/// position are shuffled among themselves.
fn interleave(
    asks: &[TraderId],
    bids: &[TraderId],
    positions: &[usize],
    rng: &mut impl Rng,
) -> Vec<(StreamKind, TraderId)> {
    let mut pending: Vec<(usize, u64, TraderId)> =
        asks.iter().zip(positions).map(|(&id, &l)| (l, rng.gen(), id)).collect();
    pending.sort_unstable();
    let mut pending = pending.into_iter().peekable();
    let mut out = Vec::with_capacity(asks.len() + bids.len());
    for &bid in bids {
        while let Some(&(l, _, id)) = pending.peek() {
            if l - 1 > out.len() {
                break;
            }
            out.push((StreamKind::Ask, id));
            pending.next();
        }
        out.push((StreamKind::Bid, bid));
    }
    out.extend(pending.map(|(_, _, id)| (StreamKind::Ask, id)));
    out
}

/// What the one-sided auction did during a run.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SelectionTrace {
    pub stream: Vec<(StreamKind, TraderId)>,
    pub decisions: Vec<OneSidedDecision>,
}

impl SelectionTrace {
    pub fn selected(&self) -> impl Iterator<Item = (StreamKind, TraderId, Money)> + '_ {
        self.stream
            .iter()
            .zip(&self.decisions)
            .filter(|(_, d)| d.selected)
            .map(|(&(k, id), d)| (k, id, d.payment.unwrap_or(Money::ZERO)))
    }

    pub fn selected_ids(&self) -> BTreeSet<TraderId> {
        self.selected().map(|(_, id, _)| id).collect()
    }
}

/// The reduced double auction with a plugged one-sided auction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reduction {
    pub auction: AuctionKind,
    pub sampler: PositionSampler,
    /// Overrides the default capacity `k = number of sellers`.
    pub k_override: Option<usize>,
}

impl Reduction {
    pub fn new(auction: AuctionKind, sampler: PositionSampler) -> Self {
        Reduction { auction, sampler, k_override: None }
    }

    /// Runs once; returns the outcome together with the auction's selections.
    pub fn run_traced(&self, instance: &Instance, seed: u64, log: &mut EventLog) -> Result<(Outcome, SelectionTrace)> {
        if !instance.patient_sellers() {
            return Err(Error::Precondition(
                "reduction requires patient sellers; use market decomposition for general instances".into(),
            ));
        }
        // Sellers whose reported window misses part of the buyer arrival span
        // take no part in the run.
        let mut asks: Vec<_> = instance.sellers().iter().filter(|s| instance.seller_is_patient(s)).copied().collect();
        let tie_seed = derive_seed(seed, 2);
        asks.sort_by_key(|s| (s.v, tie_key(tie_seed, s.id), s.id));
        let n_a = asks.len();
        let n = n_a + instance.num_buyers();
        let k = self.k_override.unwrap_or(n_a);
        if n_a == 0 && self.k_override.is_none() {
            return Ok((Outcome::no_trade(instance), SelectionTrace::default()));
        }
        let config = AuctionConfig::new(n, k, derive_seed(seed, 1))?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));
        let stream = sample_positions(instance, &self.sampler, &mut rng)?;

        let lookup = |id: TraderId| instance.trader(id).copied().ok_or(Error::UnknownTrader(id));
        let mut next_ask = 0usize;

        let mut auction = self.auction.start(&config)?;
        let mut matching = Matching::empty_for(instance);
        let mut buyer_pay = BTreeMap::new();
        let mut decisions = Vec::with_capacity(n);
        let mut clock = TimePoint(0);
        for &(kind, id) in &stream.entries {
            let trader = lookup(id)?;
            if kind == StreamKind::Bid {
                clock = trader.a;
                log.push(clock, EventKind::BidArrive, &[id], Some(trader.v));
            }
            let d = auction.offer(trader.v)?;
            decisions.push(d);
            let Some(p) = d.payment.filter(|_| d.selected) else {
                if kind == StreamKind::Bid {
                    log.push(clock, EventKind::Reject, &[id], None);
                }
                continue;
            };
            log.push(clock, EventKind::Select, &[id], Some(p));
            if kind == StreamKind::Ask {
                continue;
            }
            match asks.get(next_ask) {
                Some(ask) if trader.v >= ask.v => {
                    next_ask += 1;
                    let pay = p.max(ask.v);
                    matching.push_pair(ask.id, id);
                    buyer_pay.insert(id, pay);
                    log.push(clock, EventKind::Match, &[ask.id, id], None);
                    log.push(clock, EventKind::Payment, &[id], Some(pay));
                }
                _ => log.push(clock, EventKind::Reject, &[id], None),
            }
        }
        auction.finish()?;

        let trace = SelectionTrace { stream: stream.entries, decisions };
        let selected = trace.selected_ids();
        let mut payments = buyer_pay;
        if !matching.pairs.is_empty() {
            let ctx = PaymentContext::new(instance, &matching, |id| selected.contains(&id))?;
            for (i, &(ask, _)) in matching.pairs.iter().enumerate() {
                let pay = ctx.seller_payment_at(i);
                log.push(clock, EventKind::Payment, &[ask], Some(pay));
                payments.insert(ask, pay);
            }
        }
        Ok((Outcome::from_matching(instance, matching, payments), trace))
    }
}

impl Mechanism for Reduction {
    fn name(&self) -> String {
        format!("reduction[{}]", self.auction.name())
    }

    fn is_randomized(&self) -> bool {
        true
    }

    fn run_logged(&self, instance: &Instance, seed: u64, log: &mut EventLog) -> Result<Outcome> {
        self.run_traced(instance, seed, log).map(|(o, _)| o)
    }
}

pub fn run_reduction(instance: &Instance, reduction: &Reduction, seed: u64) -> Result<Outcome> {
    reduction.run(instance, seed)
}

/// The welfare of the reduced auction is at least the total valuation of
/// everything the one-sided auction selected.
pub fn welfare_floor_check(instance: &Instance, trace: &SelectionTrace, outcome: &Outcome) -> Result<bool> {
    let mut floor = Money::ZERO;
    for (_, id, _) in trace.selected() {
        floor += instance.trader(id).ok_or(Error::UnknownTrader(id))?.v;
    }
    Ok(social_welfare(instance, outcome)? >= floor)
}

/// Seller payments recomputed with every unmatched bid counted, rather than
/// only the selected ones. Used to show the restriction matters.
pub fn seller_payments_all_bids(instance: &Instance, outcome: &Outcome) -> Result<BTreeMap<TraderId, Money>> {
    let m = &outcome.matching;
    if m.pairs.is_empty() {
        return Ok(BTreeMap::new());
    }
    let ctx = PaymentContext::new(instance, m, |_| true)?;
    Ok(m.pairs.iter().enumerate().map(|(i, &(ask, _))| (ask, ctx.seller_payment_at(i))).collect())
}
