//! Market vocabulary: trader types, instances, matchings and outcomes, plus
//! the welfare, utility and feasibility computations every mechanism is
//! judged by.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::money::{Money, SignedMoney};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TraderId(pub u32);

impl fmt::Display for TraderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Integer clock ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct TimePoint(pub u64);

impl fmt::Display for TimePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Seller,
    Buyer,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Seller => "seller",
            Role::Buyer => "buyer",
        })
    }
}

/// A reported (or true) type: valuation plus closed activity window `[a, d]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TraderType {
    pub id: TraderId,
    pub role: Role,
    pub v: Money,
    pub a: TimePoint,
    pub d: TimePoint,
}

impl TraderType {
    pub fn seller(id: u32, v: u64, a: u64, d: u64) -> Self {
        TraderType { id: TraderId(id), role: Role::Seller, v: Money(v), a: TimePoint(a), d: TimePoint(d) }
    }

    pub fn buyer(id: u32, v: u64, a: u64, d: u64) -> Self {
        TraderType { id: TraderId(id), role: Role::Buyer, v: Money(v), a: TimePoint(a), d: TimePoint(d) }
    }

    pub fn with_value(self, v: Money) -> Self {
        TraderType { v, ..self }
    }

    pub fn with_window(self, a: TimePoint, d: TimePoint) -> Self {
        TraderType { a, d, ..self }
    }

    /// Closed-interval overlap; touching endpoints count.
    pub fn overlaps(&self, other: &TraderType) -> bool {
        self.a <= other.d && other.a <= self.d
    }

    pub fn covers(&self, from: TimePoint, to: TimePoint) -> bool {
        self.a <= from && to <= self.d
    }
}

/// `ask` and `bid` are matchable iff `v_ask ≤ v_bid` and their windows overlap.
pub fn matchable(ask: &TraderType, bid: &TraderType) -> Result<bool> {
    if ask.role != Role::Seller || bid.role != Role::Buyer {
        return Err(Error::Contract(format!("matchable expects (seller, buyer), got ({}, {})", ask.role, bid.role)));
    }
    Ok(ask.v <= bid.v && ask.overlaps(bid))
}

pub(crate) fn matchable_unchecked(ask: &TraderType, bid: &TraderType) -> bool {
    debug_assert!(ask.role == Role::Seller && bid.role == Role::Buyer);
    ask.v <= bid.v && ask.overlaps(bid)
}

/// A full market scenario. Buyers are kept in arrival order; simultaneous
/// arrivals keep their listed order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    sellers: Vec<TraderType>,
    buyers: Vec<TraderType>,
    listed_buyers: Vec<TraderType>,
    patient_sellers: bool,
    horizon: TimePoint,
}

impl Instance {
    /// Validates and normalises an instance. When `patient_sellers` is set,
    /// every seller must be active over the whole buyer arrival span.
    pub fn new(
        sellers: Vec<TraderType>,
        buyers: Vec<TraderType>,
        patient_sellers: bool,
        horizon: TimePoint,
    ) -> Result<Self> {
        let inst = Self::build(sellers, buyers, patient_sellers, horizon)?;
        if patient_sellers {
            if let Some(s) = inst.sellers.iter().find(|s| !inst.seller_is_patient(s)) {
                return Err(Error::InvalidInstance(format!(
                    "seller {} window [{}, {}] does not cover buyer arrivals",
                    s.id, s.a, s.d
                )));
            }
        }
        Ok(inst)
    }

    fn build(
        sellers: Vec<TraderType>,
        listed_buyers: Vec<TraderType>,
        patient_sellers: bool,
        horizon: TimePoint,
    ) -> Result<Self> {
        let buyers = &listed_buyers;
        let mut ids = BTreeSet::new();
        for (t, role) in sellers.iter().map(|s| (s, Role::Seller)).chain(buyers.iter().map(|b| (b, Role::Buyer))) {
            if t.role != role {
                return Err(Error::InvalidInstance(format!(
                    "trader {} listed as {} but has role {}",
                    t.id, role, t.role
                )));
            }
            if t.a > t.d {
                return Err(Error::InvalidInstance(format!("trader {} arrives after departing", t.id)));
            }
            if t.d > horizon {
                return Err(Error::InvalidInstance(format!("trader {} departs after horizon {}", t.id, horizon)));
            }
            if !ids.insert(t.id) {
                return Err(Error::InvalidInstance(format!("duplicate trader id {}", t.id)));
            }
        }
        let mut buyers = listed_buyers.clone();
        buyers.sort_by_key(|b| b.a);
        Ok(Instance { sellers, buyers, listed_buyers, patient_sellers, horizon })
    }

    pub fn sellers(&self) -> &[TraderType] {
        &self.sellers
    }

    /// Buyers in the order they were listed, before sorting by arrival.
    pub fn listed_buyers(&self) -> &[TraderType] {
        &self.listed_buyers
    }

    /// Buyers in arrival order.
    pub fn buyers(&self) -> &[TraderType] {
        &self.buyers
    }

    pub fn patient_sellers(&self) -> bool {
        self.patient_sellers
    }

    pub fn horizon(&self) -> TimePoint {
        self.horizon
    }

    pub fn num_sellers(&self) -> usize {
        self.sellers.len()
    }

    pub fn num_buyers(&self) -> usize {
        self.buyers.len()
    }

    pub fn traders(&self) -> impl Iterator<Item = &TraderType> {
        self.sellers.iter().chain(self.buyers.iter())
    }

    pub fn trader(&self, id: TraderId) -> Option<&TraderType> {
        self.traders().find(|t| t.id == id)
    }

    /// `[first buyer arrival, last buyer arrival]`, if there are buyers.
    pub fn buyer_arrival_span(&self) -> Option<(TimePoint, TimePoint)> {
        Some((self.buyers.first()?.a, self.buyers.last()?.a))
    }

    pub fn seller_is_patient(&self, seller: &TraderType) -> bool {
        self.buyer_arrival_span().is_none_or(|(lo, hi)| seller.covers(lo, hi))
    }

    /// The same market with one trader's report replaced. Buyer order is
    /// re-derived from the listing, so ties keep the original listed order. Seller
    /// patience is not re-checked: a seller who shrinks her window below the
    /// buyer arrival span is simply not considered by patient-seller
    /// mechanisms.
    pub fn with_report(&self, report: TraderType) -> Result<Self> {
        let mut sellers = self.sellers.clone();
        let mut buyers = self.listed_buyers.clone();
        let slot = match report.role {
            Role::Seller => sellers.iter_mut().find(|t| t.id == report.id),
            Role::Buyer => buyers.iter_mut().find(|t| t.id == report.id),
        };
        match slot {
            Some(t) => *t = report,
            None => return Err(Error::UnknownTrader(report.id)),
        }
        Self::build(sellers, buyers, self.patient_sellers, self.horizon)
    }
}

/// Ask–bid pairs in the order bids were matched, plus everyone left over.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Matching {
    pub pairs: Vec<(TraderId, TraderId)>,
    pub unmatched_asks: BTreeSet<TraderId>,
    pub unmatched_bids: BTreeSet<TraderId>,
}

impl Matching {
    /// An empty matching with every trader of `instance` unmatched.
    pub fn empty_for(instance: &Instance) -> Self {
        Matching {
            pairs: Vec::new(),
            unmatched_asks: instance.sellers().iter().map(|s| s.id).collect(),
            unmatched_bids: instance.buyers().iter().map(|b| b.id).collect(),
        }
    }

    pub(crate) fn push_pair(&mut self, ask: TraderId, bid: TraderId) {
        self.unmatched_asks.remove(&ask);
        self.unmatched_bids.remove(&bid);
        self.pairs.push((ask, bid));
    }

    pub fn pair_of(&self, id: TraderId) -> Option<(usize, (TraderId, TraderId))> {
        self.pairs.iter().copied().enumerate().find(|(_, (a, b))| *a == id || *b == id)
    }

    pub fn counterparty(&self, id: TraderId) -> Option<TraderId> {
        self.pair_of(id).map(|(_, (a, b))| if a == id { b } else { a })
    }

    pub fn is_matched(&self, id: TraderId) -> bool {
        self.pair_of(id).is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Allocation {
    pub role: Role,
    pub traded: bool,
}

/// Allocation indicators and payments for every trader of a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub allocation: BTreeMap<TraderId, Allocation>,
    pub payments: BTreeMap<TraderId, Money>,
    pub matching: Matching,
}

impl Outcome {
    /// Derives allocation indicators from `matching`; traders absent from
    /// `payments` pay and receive nothing.
    pub fn from_matching(instance: &Instance, matching: Matching, mut payments: BTreeMap<TraderId, Money>) -> Self {
        let mut allocation = BTreeMap::new();
        for t in instance.traders() {
            let traded = matching.is_matched(t.id);
            allocation.insert(t.id, Allocation { role: t.role, traded });
            payments.entry(t.id).or_insert(Money::ZERO);
        }
        Outcome { allocation, payments, matching }
    }

    /// No trades, no payments.
    pub fn no_trade(instance: &Instance) -> Self {
        Self::from_matching(instance, Matching::empty_for(instance), BTreeMap::new())
    }

    pub fn traded(&self, id: TraderId) -> bool {
        self.allocation.get(&id).is_some_and(|a| a.traded)
    }

    pub fn payment(&self, id: TraderId) -> Money {
        self.payments.get(&id).copied().unwrap_or(Money::ZERO)
    }
}

/// `Σ_{buyers} v·π + Σ_{sellers} v·(1−π)`.
pub fn social_welfare(instance: &Instance, outcome: &Outcome) -> Result<Money> {
    if let Some(id) = outcome.allocation.keys().find(|id| instance.trader(**id).is_none()) {
        return Err(Error::UnknownTrader(*id));
    }
    let mut w = Money::ZERO;
    for t in instance.traders() {
        let alloc = outcome.allocation.get(&t.id).ok_or(Error::UnknownTrader(t.id))?;
        let counts = match t.role {
            Role::Buyer => alloc.traded,
            Role::Seller => !alloc.traded,
        };
        if counts {
            w += t.v;
        }
    }
    Ok(w)
}

/// Utility of a trader with true type `trader` under `outcome` (which may
/// have been produced from a misreport).
pub fn utility(trader: &TraderType, outcome: &Outcome) -> Result<SignedMoney> {
    let alloc = outcome.allocation.get(&trader.id).ok_or(Error::UnknownTrader(trader.id))?;
    let pay = outcome.payment(trader.id).signed();
    let value = if alloc.traded { trader.v.signed() } else { SignedMoney::ZERO };
    Ok(match trader.role {
        Role::Buyer => value - pay,
        Role::Seller => pay - value,
    })
}

/// A permitted misreport keeps id and role, and reports a window inside the true one.
pub fn validate_misreport(true_type: &TraderType, report: &TraderType) -> bool {
    true_type.id == report.id
        && true_type.role == report.role
        && report.a <= report.d
        && true_type.a <= report.a
        && report.d <= true_type.d
}

/// Equal traded counts on both sides, and a matching consistent with the
/// allocation indicators.
pub fn check_feasibility(outcome: &Outcome) -> bool {
    let count = |role| outcome.allocation.values().filter(|a| a.role == role && a.traded).count();
    if count(Role::Buyer) != count(Role::Seller) {
        return false;
    }
    let m = &outcome.matching;
    let mut seen = BTreeSet::new();
    for &(ask, bid) in &m.pairs {
        let ok = |id: TraderId, role| outcome.allocation.get(&id).is_some_and(|a| a.role == role && a.traded);
        if !ok(ask, Role::Seller) || !ok(bid, Role::Buyer) || !seen.insert(ask) || !seen.insert(bid) {
            return false;
        }
    }
    for id in m.unmatched_asks.iter().chain(m.unmatched_bids.iter()) {
        if !seen.insert(*id) || outcome.traded(*id) {
            return false;
        }
    }
    m.pairs.len() == count(Role::Buyer)
}

/// Total paid to sellers minus total collected from buyers.
pub fn deficit(outcome: &Outcome) -> SignedMoney {
    outcome
        .allocation
        .iter()
        .map(|(id, a)| {
            let p = outcome.payment(*id).signed();
            match a.role {
                Role::Seller => p,
                Role::Buyer => -p,
            }
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn fig1() -> Instance {
        Instance::new(
            vec![
                TraderType::seller(1, 2, 0, 10),
                TraderType::seller(2, 3, 0, 10),
                TraderType::seller(3, 5, 0, 10),
                TraderType::seller(4, 8, 0, 10),
            ],
            vec![
                TraderType::buyer(5, 7, 1, 1),
                TraderType::buyer(6, 4, 2, 2),
                TraderType::buyer(7, 6, 3, 3),
                TraderType::buyer(8, 3, 4, 4),
            ],
            true,
            TimePoint(10),
        )
        .unwrap()
    }

    fn fig1_outcome(inst: &Instance) -> Outcome {
        let mut m = Matching::empty_for(inst);
        m.push_pair(TraderId(1), TraderId(5));
        m.push_pair(TraderId(2), TraderId(6));
        m.push_pair(TraderId(3), TraderId(7));
        let payments = [(1, 5), (2, 5), (3, 6), (5, 2), (6, 3), (7, 5)]
            .into_iter()
            .map(|(id, p)| (TraderId(id), Money(p)))
            .collect();
        Outcome::from_matching(inst, m, payments)
    }

    #[test]
    fn matchable_examples() {
        let ask = TraderType::seller(1, 2, 0, 10);
        assert!(matchable(&ask, &TraderType::buyer(2, 7, 1, 2)).unwrap());
        let ask = TraderType::seller(1, 5, 0, 10);
        assert!(!matchable(&ask, &TraderType::buyer(2, 4, 1, 2)).unwrap());
        let ask = TraderType::seller(1, 3, 0, 1);
        assert!(matchable(&ask, &TraderType::buyer(2, 9, 1, 5)).unwrap());
        assert!(!matchable(&ask, &TraderType::buyer(2, 9, 2, 5)).unwrap());
    }

    #[test]
    fn matchable_rejects_role_mismatch() {
        let a = TraderType::buyer(1, 2, 0, 10);
        let b = TraderType::buyer(2, 7, 1, 2);
        assert!(matches!(matchable(&a, &b), Err(Error::Contract(_))));
    }

    #[test]
    fn welfare_examples() {
        let empty = Instance::new(vec![], vec![], true, TimePoint(0)).unwrap();
        assert_eq!(social_welfare(&empty, &Outcome::no_trade(&empty)).unwrap(), Money(0));

        let inst = fig1();
        assert_eq!(social_welfare(&inst, &Outcome::no_trade(&inst)).unwrap(), Money(18));
        assert_eq!(social_welfare(&inst, &fig1_outcome(&inst)).unwrap(), Money(25));
    }

    #[test]
    fn welfare_rejects_foreign_ids() {
        let inst = fig1();
        let mut out = fig1_outcome(&inst);
        out.allocation.insert(TraderId(99), Allocation { role: Role::Buyer, traded: false });
        assert_eq!(social_welfare(&inst, &out), Err(Error::UnknownTrader(TraderId(99))));
    }

    #[test]
    fn utility_examples() {
        let inst = fig1();
        let out = fig1_outcome(&inst);
        let u = |id: u32| utility(inst.trader(TraderId(id)).unwrap(), &out).unwrap();
        assert_eq!(u(8), SignedMoney(0));
        assert_eq!(u(4), SignedMoney(0));
        assert_eq!(u(5), SignedMoney(5));
        assert_eq!(u(3), SignedMoney(1));
        assert_eq!(deficit(&out), SignedMoney(6));
    }

    #[test]
    fn misreport_rules() {
        let t = TraderType::seller(1, 5, 2, 8);
        assert!(validate_misreport(&t, &TraderType::seller(1, 9, 2, 8)));
        assert!(!validate_misreport(&t, &TraderType::seller(1, 5, 1, 8)));
        assert!(validate_misreport(&t, &TraderType::seller(1, 5, 3, 7)));
        assert!(!validate_misreport(&t, &TraderType::seller(1, 5, 2, 9)));
        assert!(!validate_misreport(&t, &TraderType::seller(1, 5, 6, 4)));
        assert!(!validate_misreport(&t, &TraderType::buyer(1, 5, 2, 8)));
    }

    #[test]
    fn feasibility_examples() {
        let empty = Instance::new(vec![], vec![], false, TimePoint(0)).unwrap();
        assert!(check_feasibility(&Outcome::no_trade(&empty)));
        let inst = fig1();
        let out = fig1_outcome(&inst);
        assert!(check_feasibility(&out));

        let mut bad = out.clone();
        bad.allocation.get_mut(&TraderId(8)).unwrap().traded = true;
        assert!(!check_feasibility(&bad));
    }

    #[test]
    fn instance_validation() {
        let s = TraderType::seller(1, 2, 3, 10);
        let b = TraderType::buyer(2, 2, 1, 2);
        assert!(matches!(Instance::new(vec![s], vec![b], true, TimePoint(10)), Err(Error::InvalidInstance(_))));
        assert!(Instance::new(vec![s], vec![b], false, TimePoint(10)).is_ok());
        assert!(Instance::new(vec![s], vec![b], false, TimePoint(9)).is_err());
        let dup = TraderType::buyer(1, 2, 1, 2);
        assert!(Instance::new(vec![s], vec![dup], false, TimePoint(10)).is_err());
        let backwards = TraderType::buyer(3, 2, 5, 2);
        assert!(Instance::new(vec![], vec![backwards], false, TimePoint(10)).is_err());
    }

    #[test]
    fn buyers_sorted_stably() {
        let inst = Instance::new(
            vec![],
            vec![TraderType::buyer(1, 1, 5, 5), TraderType::buyer(2, 1, 3, 3), TraderType::buyer(3, 1, 5, 6)],
            false,
            TimePoint(10),
        )
        .unwrap();
        let order: Vec<u32> = inst.buyers().iter().map(|b| b.id.0).collect();
        assert_eq!(order, vec![2, 1, 3]);
        let moved = inst.with_report(TraderType::buyer(2, 1, 5, 5)).unwrap();
        let order: Vec<u32> = moved.buyers().iter().map(|b| b.id.0).collect();
        assert_eq!(order, vec![1, 2, 3]);
    }
}
