//! Offline optimal allocations, the benchmark for competitive ratios.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::market::{matchable_unchecked, social_welfare, Instance, Matching, Outcome, TraderType};
use crate::money::Money;

/// Largest side the exhaustive oracle accepts.
pub const EXACT_ORACLE_LIMIT: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub matching: Matching,
    pub welfare: Money,
}

impl OracleResult {
    fn from_pairs(instance: &Instance, pairs: Vec<(TraderType, TraderType)>) -> Result<Self> {
        let mut matching = Matching::empty_for(instance);
        for (ask, bid) in pairs {
            matching.push_pair(ask.id, bid.id);
        }
        let welfare = social_welfare(instance, &Outcome::from_matching(instance, matching.clone(), BTreeMap::new()))?;
        Ok(OracleResult { matching, welfare })
    }

    /// The allocation as an outcome with zero payments.
    pub fn outcome(&self, instance: &Instance) -> Outcome {
        Outcome::from_matching(instance, self.matching.clone(), BTreeMap::new())
    }
}

/// Optimum for patient sellers: highest bid with lowest ask, second highest
/// with second lowest, and so on while the valuations still allow a trade.
/// Equal valuations are ordered by id.
pub fn optimal_patient(instance: &Instance) -> Result<OracleResult> {
    if !instance.patient_sellers() {
        return Err(Error::Precondition("sorted oracle requires patient sellers".into()));
    }
    let mut asks = instance.sellers().to_vec();
    asks.sort_by_key(|a| (a.v, a.id));
    let mut bids = instance.buyers().to_vec();
    bids.sort_by(|x, y| y.v.cmp(&x.v).then(x.id.cmp(&y.id)));
    let pairs = asks.into_iter().zip(bids).take_while(|(a, b)| a.v <= b.v).collect();
    OracleResult::from_pairs(instance, pairs)
}

/// Exact maximum-welfare matching over matchability-respecting pairs for
/// arbitrary windows, by memoised enumeration of which bids each ask takes.
pub fn optimal_general(instance: &Instance) -> Result<OracleResult> {
    let (n_a, n_b) = (instance.num_sellers(), instance.num_buyers());
    if n_a > EXACT_ORACLE_LIMIT || n_b > EXACT_ORACLE_LIMIT {
        return Err(Error::TooLarge { sellers: n_a, buyers: n_b, limit: EXACT_ORACLE_LIMIT });
    }
    let asks = instance.sellers();
    let bids = instance.buyers();
    // gain[i][j] = v_bid - v_ask for matchable pairs.
    let gain: Vec<Vec<Option<u64>>> =
        asks.iter().map(|a| bids.iter().map(|b| matchable_unchecked(a, b).then(|| b.v.0 - a.v.0)).collect()).collect();

    let masks = 1usize << n_b;
    // best[i][mask]: max gain from asks i.. given bids in `mask` are taken.
    let mut best = vec![vec![0u64; masks]; n_a + 1];
    for i in (0..n_a).rev() {
        for mask in 0..masks {
            let mut b = best[i + 1][mask];
            for (j, g) in gain[i].iter().enumerate() {
                if let Some(g) = g {
                    if mask & (1 << j) == 0 {
                        b = b.max(g + best[i + 1][mask | (1 << j)]);
                    }
                }
            }
            best[i][mask] = b;
        }
    }

    let mut chosen: Vec<(usize, usize)> = Vec::new();
    let mut mask = 0usize;
    for i in 0..n_a {
        let target = best[i][mask];
        if target == best[i + 1][mask] {
            continue;
        }
        let j = (0..n_b)
            .find(|&j| mask & (1 << j) == 0 && gain[i][j].is_some_and(|g| g + best[i + 1][mask | (1 << j)] == target))
            .expect("optimum is attained by some choice");
        chosen.push((i, j));
        mask |= 1 << j;
    }
    chosen.sort_by_key(|&(_, j)| j);
    let pairs = chosen.into_iter().map(|(i, j)| (asks[i], bids[j])).collect();
    OracleResult::from_pairs(instance, pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{TimePoint, TraderId};

    fn fig1() -> Instance {
        Instance::new(
            [2, 3, 5, 8].iter().enumerate().map(|(i, &v)| TraderType::seller(i as u32 + 1, v, 0, 10)).collect(),
            [7, 4, 6, 3]
                .iter()
                .enumerate()
                .map(|(i, &v)| TraderType::buyer(i as u32 + 5, v, i as u64 + 1, i as u64 + 1))
                .collect(),
            true,
            TimePoint(10),
        )
        .unwrap()
    }

    #[test]
    fn patient_oracle_fig1() {
        let inst = fig1();
        let r = optimal_patient(&inst).unwrap();
        assert_eq!(r.matching.pairs, vec![(TraderId(1), TraderId(5)), (TraderId(2), TraderId(7))]);
        assert_eq!(r.welfare, Money(26));
        assert_eq!(optimal_general(&inst).unwrap().welfare, Money(26));
    }

    #[test]
    fn patient_oracle_edges() {
        let no_bids = Instance::new(
            vec![TraderType::seller(1, 4, 0, 1), TraderType::seller(2, 6, 0, 1)],
            vec![],
            true,
            TimePoint(1),
        )
        .unwrap();
        assert_eq!(optimal_patient(&no_bids).unwrap().welfare, Money(10));

        let equal = Instance::new(
            vec![TraderType::seller(1, 5, 0, 2)],
            vec![TraderType::buyer(2, 5, 1, 1)],
            true,
            TimePoint(2),
        )
        .unwrap();
        let r = optimal_patient(&equal).unwrap();
        assert_eq!(r.matching.pairs.len(), 1);
        assert_eq!(r.welfare, Money(5));

        let general = Instance::new(
            vec![TraderType::seller(1, 5, 0, 2)],
            vec![TraderType::buyer(2, 5, 1, 1)],
            false,
            TimePoint(2),
        )
        .unwrap();
        assert!(matches!(optimal_patient(&general), Err(Error::Precondition(_))));
    }

    #[test]
    fn general_oracle_prefers_late_big_bid() {
        let inst = Instance::new(
            vec![TraderType::seller(1, 1, 0, 10)],
            vec![TraderType::buyer(2, 2, 1, 2), TraderType::buyer(3, 100, 3, 4)],
            false,
            TimePoint(10),
        )
        .unwrap();
        let r = optimal_general(&inst).unwrap();
        assert_eq!(r.welfare, Money(100));
        assert_eq!(r.matching.pairs, vec![(TraderId(1), TraderId(3))]);
    }

    #[test]
    fn general_oracle_disjoint_windows() {
        let inst = Instance::new(
            vec![TraderType::seller(1, 1, 0, 2), TraderType::seller(2, 3, 0, 2)],
            vec![TraderType::buyer(3, 50, 3, 4), TraderType::buyer(4, 60, 5, 6)],
            false,
            TimePoint(6),
        )
        .unwrap();
        let r = optimal_general(&inst).unwrap();
        assert!(r.matching.pairs.is_empty());
        assert_eq!(r.welfare, Money(4));
    }

    #[test]
    fn general_oracle_size_bound() {
        let sellers = (0..13).map(|i| TraderType::seller(i, 1, 0, 1)).collect();
        let inst = Instance::new(sellers, vec![], false, TimePoint(1)).unwrap();
        assert!(matches!(optimal_general(&inst), Err(Error::TooLarge { sellers: 13, .. })));
    }
}
