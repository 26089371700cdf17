//! The deterministic greedy mechanism: Best-first allocation with
//! critical-value payments.
//!
//! Asks are ranked once by ascending valuation. Each arriving bid is matched
//! to the best-ranked unmatched ask if the two are matchable; otherwise the
//! bid is rejected for good. After the last bid, every matched buyer pays the
//! valuation of the ask he took and every matched seller is paid according to
//! whether the last matched pair is reachable from her own pair.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::market::{matchable_unchecked, Instance, Matching, Outcome, Role, TimePoint, TraderId, TraderType};
use crate::mechanism::{mix_seed, EventKind, EventLog, Mechanism};
use crate::money::{ExtendedMoney, Money};

pub use crate::market::deficit;

/// Asks in ranking order together with the matching built so far.
#[derive(Debug, Clone)]
pub struct GreedyState {
    ranked_asks: Vec<TraderType>,
    next_ask: usize,
    matching: Matching,
}

impl GreedyState {
    /// Ranks the participating asks of `instance`. Equal valuations are
    /// ordered by a key derived from `(tie_seed, id)`, so a trader's rank
    /// among equals does not depend on anyone's report.
    pub fn new(instance: &Instance, tie_seed: u64) -> Self {
        let mut ranked_asks: Vec<TraderType> =
            instance.sellers().iter().filter(|s| instance.seller_is_patient(s)).copied().collect();
        ranked_asks.sort_by_key(|s| (s.v, tie_key(tie_seed, s.id), s.id));
        GreedyState { ranked_asks, next_ask: 0, matching: Matching::empty_for(instance) }
    }

    pub fn ranked_asks(&self) -> &[TraderType] {
        &self.ranked_asks
    }

    pub fn matching(&self) -> &Matching {
        &self.matching
    }

    /// Handles one arriving bid; returns the ask it was matched to, if any.
    /// Matched asks always form a prefix of the ranking.
    pub fn offer(&mut self, bid: &TraderType) -> Option<TraderType> {
        let ask = *self.ranked_asks.get(self.next_ask)?;
        if matchable_unchecked(&ask, bid) {
            self.next_ask += 1;
            self.matching.push_pair(ask.id, bid.id);
            Some(ask)
        } else {
            None
        }
    }

    pub fn into_matching(self) -> Matching {
        self.matching
    }
}

pub(crate) fn tie_key(tie_seed: u64, id: TraderId) -> u64 {
    mix_seed(tie_seed ^ mix_seed(u64::from(id.0)))
}

fn require_patient(instance: &Instance, what: &str) -> Result<()> {
    if instance.patient_sellers() {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "{what} requires patient sellers; use market decomposition for general instances"
        )))
    }
}

pub fn run_greedy(instance: &Instance, tie_seed: u64) -> Result<Outcome> {
    run_greedy_logged(instance, tie_seed, &mut EventLog::new())
}

pub fn run_greedy_logged(instance: &Instance, tie_seed: u64, log: &mut EventLog) -> Result<Outcome> {
    require_patient(instance, "greedy mechanism")?;
    let mut state = GreedyState::new(instance, tie_seed);
    for bid in instance.buyers() {
        log.push(bid.a, EventKind::BidArrive, &[bid.id], Some(bid.v));
        match state.offer(bid) {
            Some(ask) => {
                log.push(bid.a, EventKind::Match, &[ask.id, bid.id], None);
                log.push(bid.a, EventKind::Payment, &[bid.id], Some(ask.v));
            }
            None => log.push(bid.a, EventKind::Reject, &[bid.id], None),
        }
    }
    let matching = state.into_matching();
    let ctx = PaymentContext::new(instance, &matching, |_| true)?;
    let end = instance.buyers().last().map_or(TimePoint(0), |b| b.a);
    let mut payments = BTreeMap::new();
    for (i, &(ask, bid)) in matching.pairs.iter().enumerate() {
        let pay = ctx.seller_payment_at(i);
        log.push(end, EventKind::Payment, &[ask], Some(pay));
        payments.insert(ask, pay);
        payments.insert(bid, ctx.ask_value(i));
    }
    Ok(Outcome::from_matching(instance, matching, payments))
}

/// The greedy mechanism as a pluggable [`Mechanism`]; the run seed is the tie seed.
#[derive(Debug, Clone, Copy, Default)]
pub struct Greedy;

impl Mechanism for Greedy {
    fn name(&self) -> String {
        "greedy".into()
    }

    fn is_randomized(&self) -> bool {
        false
    }

    fn run_logged(&self, instance: &Instance, seed: u64, log: &mut EventLog) -> Result<Outcome> {
        run_greedy_logged(instance, seed, log)
    }
}

/// Pair `i` can reach pair `j` (`i ≤ j`) iff for every `i ≤ m < j` the bid
/// of pair `m` is matchable with the ask of pair `m + 1`.
pub fn reachable(matching: &Matching, i: usize, j: usize, instance: &Instance) -> Result<bool> {
    let n = matching.pairs.len();
    if i > j || j >= n {
        return Err(Error::Contract(format!("pair indices ({i}, {j}) invalid for {n} pairs")));
    }
    let pairs = resolve_pairs(instance, matching)?;
    Ok(reachable_resolved(&pairs, i, j))
}

fn reachable_resolved(pairs: &[(TraderType, TraderType)], i: usize, j: usize) -> bool {
    (i..j).all(|m| matchable_unchecked(&pairs[m + 1].0, &pairs[m].1))
}

fn resolve_pairs(instance: &Instance, matching: &Matching) -> Result<Vec<(TraderType, TraderType)>> {
    matching
        .pairs
        .iter()
        .map(|&(a, b)| {
            let ask = instance.trader(a).ok_or(Error::UnknownTrader(a))?;
            let bid = instance.trader(b).ok_or(Error::UnknownTrader(b))?;
            Ok((*ask, *bid))
        })
        .collect()
}

/// Payment for a matched seller.
///
/// With `θ̄_min` the lowest unmatched ask (`+∞` if none) and `θ̄_max` the
/// highest unmatched bid (`0` if none): `min(θ̄_min, max(θ_last^B, θ̄_max))`
/// when the last matched bid is reachable from the seller's pair, otherwise
/// `max(θ_last^A, θ̄_max)`.
pub fn seller_payment(matching: &Matching, instance: &Instance, seller: TraderId) -> Result<Money> {
    let ctx = PaymentContext::new(instance, matching, |_| true)?;
    let i = ctx.pair_index(seller, Role::Seller)?;
    Ok(ctx.seller_payment_at(i))
}

/// Payment for a matched buyer: the valuation of the ask he was matched to.
pub fn buyer_payment(matching: &Matching, instance: &Instance, buyer: TraderId) -> Result<Money> {
    let ctx = PaymentContext::new(instance, matching, |_| true)?;
    let i = ctx.pair_index(buyer, Role::Buyer)?;
    Ok(ctx.ask_value(i))
}

/// End-of-run quantities the seller payment rule depends on.
pub(crate) struct PaymentContext {
    pairs: Vec<(TraderType, TraderType)>,
    min_unmatched_ask: ExtendedMoney,
    max_unmatched_bid: Money,
}

impl PaymentContext {
    /// `bid_considered` restricts which unmatched bids count towards `θ̄_max`.
    pub(crate) fn new(
        instance: &Instance,
        matching: &Matching,
        bid_considered: impl Fn(TraderId) -> bool,
    ) -> Result<Self> {
        let pairs = resolve_pairs(instance, matching)?;
        let lookup = |id: TraderId| instance.trader(id).copied().ok_or(Error::UnknownTrader(id));
        let mut min_unmatched_ask = ExtendedMoney::PlusInfinity;
        for &id in &matching.unmatched_asks {
            let ask = lookup(id)?;
            if instance.seller_is_patient(&ask) {
                min_unmatched_ask = min_unmatched_ask.min(ask.v.into());
            }
        }
        let mut max_unmatched_bid = Money::ZERO;
        for &id in matching.unmatched_bids.iter().filter(|id| bid_considered(**id)) {
            max_unmatched_bid = max_unmatched_bid.max(lookup(id)?.v);
        }
        Ok(PaymentContext { pairs, min_unmatched_ask, max_unmatched_bid })
    }

    fn pair_index(&self, id: TraderId, role: Role) -> Result<usize> {
        self.pairs
            .iter()
            .position(|(a, b)| match role {
                Role::Seller => a.id == id,
                Role::Buyer => b.id == id,
            })
            .ok_or_else(|| Error::Contract(format!("{role} {id} is not matched")))
    }

    pub(crate) fn ask_value(&self, i: usize) -> Money {
        self.pairs[i].0.v
    }

    pub(crate) fn seller_payment_at(&self, i: usize) -> Money {
        let last = self.pairs.len() - 1;
        let (last_ask, last_bid) = self.pairs[last];
        if reachable_resolved(&self.pairs, i, last) {
            let inner = ExtendedMoney::Finite(last_bid.v.max(self.max_unmatched_bid));
            match self.min_unmatched_ask.min(inner) {
                ExtendedMoney::Finite(m) => m,
                ExtendedMoney::PlusInfinity => unreachable!("min with a finite value"),
            }
        } else {
            last_ask.v.max(self.max_unmatched_bid)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{check_feasibility, social_welfare, utility};
    use crate::money::SignedMoney;
    use alloc::vec;

    pub(crate) fn fig1() -> Instance {
        crate::harness::generators::fig1_instance()
    }

    fn id(n: u32) -> TraderId {
        TraderId(n)
    }

    #[test]
    fn fig1_allocation_and_payments() {
        let inst = fig1();
        let out = run_greedy(&inst, 0).unwrap();
        assert_eq!(out.matching.pairs, vec![(id(1), id(5)), (id(2), id(6)), (id(3), id(7))]);
        assert!(out.matching.unmatched_asks.contains(&id(4)));
        assert!(out.matching.unmatched_bids.contains(&id(8)));
        let pay = |n| out.payment(id(n)).0;
        assert_eq!([pay(5), pay(6), pay(7)], [2, 3, 5]);
        assert_eq!([pay(1), pay(2), pay(3)], [5, 5, 6]);
        assert_eq!([pay(4), pay(8)], [0, 0]);
        assert_eq!(deficit(&out), SignedMoney(6));
        assert_eq!(social_welfare(&inst, &out).unwrap(), Money(25));
        assert!(check_feasibility(&out));
    }

    #[test]
    fn fig1_reachability() {
        let inst = fig1();
        let m = run_greedy(&inst, 0).unwrap().matching;
        assert!(reachable(&m, 0, 1, &inst).unwrap());
        assert!(!reachable(&m, 0, 2, &inst).unwrap());
        assert!(!reachable(&m, 1, 2, &inst).unwrap());
        for i in 0..3 {
            assert!(reachable(&m, i, i, &inst).unwrap());
        }
        assert!(reachable(&m, 2, 1, &inst).is_err());
        assert!(reachable(&m, 0, 3, &inst).is_err());
    }

    #[test]
    fn payment_functions_match_outcome() {
        let inst = fig1();
        let out = run_greedy(&inst, 0).unwrap();
        assert_eq!(seller_payment(&out.matching, &inst, id(3)).unwrap(), Money(6));
        assert_eq!(seller_payment(&out.matching, &inst, id(1)).unwrap(), Money(5));
        assert_eq!(buyer_payment(&out.matching, &inst, id(5)).unwrap(), Money(2));
        assert_eq!(buyer_payment(&out.matching, &inst, id(7)).unwrap(), Money(5));
        assert!(matches!(seller_payment(&out.matching, &inst, id(4)), Err(Error::Contract(_))));
        assert!(matches!(buyer_payment(&out.matching, &inst, id(8)), Err(Error::Contract(_))));
    }

    #[test]
    fn sentinel_collapse_when_everyone_trades() {
        let inst = Instance::new(
            vec![TraderType::seller(1, 2, 0, 5), TraderType::seller(2, 4, 0, 5)],
            vec![TraderType::buyer(3, 9, 1, 1), TraderType::buyer(4, 6, 2, 2)],
            true,
            TimePoint(5),
        )
        .unwrap();
        let out = run_greedy(&inst, 3).unwrap();
        assert_eq!(out.matching.pairs.len(), 2);
        // Both pairs reach the last one: min(+inf, max(6, 0)).
        assert_eq!(out.payment(id(1)), Money(6));
        assert_eq!(out.payment(id(2)), Money(6));
    }

    #[test]
    fn unmatchable_and_low_bids() {
        let inst = Instance::new(
            vec![TraderType::seller(1, 4, 0, 5)],
            vec![TraderType::buyer(2, 3, 1, 1)],
            true,
            TimePoint(5),
        )
        .unwrap();
        let out = run_greedy(&inst, 0).unwrap();
        assert!(out.matching.pairs.is_empty());
        assert_eq!(social_welfare(&inst, &out).unwrap(), Money(4));
        assert_eq!(deficit(&out), SignedMoney(0));
    }

    #[test]
    fn equal_valued_match_has_zero_buyer_utility() {
        let inst = Instance::new(
            vec![TraderType::seller(1, 5, 0, 5)],
            vec![TraderType::buyer(2, 5, 1, 1)],
            true,
            TimePoint(5),
        )
        .unwrap();
        let out = run_greedy(&inst, 0).unwrap();
        assert_eq!(out.payment(id(2)), Money(5));
        assert_eq!(utility(&inst.buyers()[0], &out).unwrap(), SignedMoney(0));
        assert_eq!(deficit(&out), SignedMoney(0));
    }

    #[test]
    fn rejects_impatient_instances() {
        let inst = Instance::new(
            vec![TraderType::seller(1, 1, 0, 1)],
            vec![TraderType::buyer(2, 5, 3, 3)],
            false,
            TimePoint(5),
        )
        .unwrap();
        assert!(matches!(run_greedy(&inst, 0), Err(Error::Precondition(_))));
    }

    #[test]
    fn event_log_records_online_decisions() {
        let inst = fig1();
        let mut log = EventLog::new();
        run_greedy_logged(&inst, 0, &mut log).unwrap();
        assert_eq!(log.of_kind(EventKind::BidArrive).count(), 4);
        assert_eq!(log.of_kind(EventKind::Match).count(), 3);
        assert_eq!(log.of_kind(EventKind::Reject).count(), 1);
        assert_eq!(log.of_kind(EventKind::Payment).count(), 6);
    }

    #[test]
    fn ties_are_seeded_and_stable() {
        let inst = Instance::new(
            (1..=4).map(|i| TraderType::seller(i, 5, 0, 9)).collect(),
            vec![TraderType::buyer(10, 6, 1, 1)],
            true,
            TimePoint(9),
        )
        .unwrap();
        let winner = |seed| run_greedy(&inst, seed).unwrap().matching.pairs[0].0;
        assert_eq!(winner(7), winner(7));
        let distinct: alloc::collections::BTreeSet<_> = (0..64).map(winner).collect();
        assert!(distinct.len() > 1, "tie seed never changes the winner");
    }
}
