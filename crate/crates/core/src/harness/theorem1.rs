//! The adversarial family against deterministic mechanisms without
//! patient sellers, and the match-at-arrival policy it defeats.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;

use crate::error::{Error, Result};
use crate::harness::experiment::Ratio;
use crate::market::{matchable_unchecked, social_welfare, Instance, Matching, Outcome, TimePoint, TraderType};
use crate::mechanism::{EventKind, EventLog, Mechanism};
use crate::money::Money;
use crate::oracle::optimal_general;

/// One ask (value 1, active `[0, 10]`), an early bid (value 2, `[1, 2]`) and
/// a late bid (value `big`, `[3, 4]`).
pub fn theorem1_family(big: Money) -> Result<Instance> {
    if big.0 < 10 {
        return Err(Error::Precondition(format!("late bid value must be at least 10, got {big}")));
    }
    Instance::new(
        vec![TraderType::seller(1, 1, 0, 10)],
        vec![TraderType::buyer(2, 2, 1, 2), TraderType::buyer(3, big.0, 3, 4)],
        false,
        TimePoint(10),
    )
}

/// Matches each bid on arrival to the cheapest matchable unmatched ask; both
/// sides pay or receive the ask's valuation.
#[derive(Debug, Clone, Copy, Default)]
pub struct MatchAtArrival;

impl Mechanism for MatchAtArrival {
    fn name(&self) -> String {
        "match-at-arrival".into()
    }

    fn is_randomized(&self) -> bool {
        false
    }

    fn run_logged(&self, instance: &Instance, _seed: u64, log: &mut EventLog) -> Result<Outcome> {
        let mut matching = Matching::empty_for(instance);
        let mut payments = BTreeMap::new();
        for bid in instance.buyers() {
            log.push(bid.a, EventKind::BidArrive, &[bid.id], Some(bid.v));
            let ask = instance
                .sellers()
                .iter()
                .filter(|s| matching.unmatched_asks.contains(&s.id) && matchable_unchecked(s, bid))
                .min_by_key(|s| (s.v, s.id));
            match ask {
                Some(ask) => {
                    matching.unmatched_asks.remove(&ask.id);
                    matching.unmatched_bids.remove(&bid.id);
                    matching.pairs.push((ask.id, bid.id));
                    payments.insert(ask.id, ask.v);
                    payments.insert(bid.id, ask.v);
                    log.push(bid.a, EventKind::Match, &[ask.id, bid.id], None);
                }
                None => log.push(bid.a, EventKind::Reject, &[bid.id], None),
            }
        }
        Ok(Outcome::from_matching(instance, matching, payments))
    }
}

/// Match-at-arrival welfare over the offline optimum on the family member.
pub fn theorem1_ratio(big: Money) -> Result<Ratio> {
    let inst = theorem1_family(big)?;
    let w = social_welfare(&inst, &MatchAtArrival.run(&inst, 0)?)?;
    Ok(Ratio::of(w, optimal_general(&inst)?.welfare))
}
