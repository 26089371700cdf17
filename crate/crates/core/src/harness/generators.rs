//! Seeded instance generators.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::market::{Instance, TimePoint, TraderType};
use crate::money::Money;

fn check_range(low: Money, high: Money) -> Result<()> {
    if low > high {
        Err(Error::Config(format!("empty valuation range [{low}, {high}]")))
    } else {
        Ok(())
    }
}

/// Patient-seller market with i.i.d. valuations in `[low, high]`.
///
/// Sellers are `1..=n_a`, buyers `n_a+1..`. Buyers arrive at distinct ticks
/// `1..=n_b` in a random order and stay for up to two more ticks. Sellers are
/// active over the whole horizon `[0, n_b + 2]`, so any buyer misreport keeps
/// them patient.
pub fn random_patient_instance(seed: u64, n_a: usize, n_b: usize, low: Money, high: Money) -> Result<Instance> {
    check_range(low, high)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = n_b as u64 + 2;
    let sellers = (0..n_a).map(|i| TraderType::seller(i as u32 + 1, rng.gen_range(low.0..=high.0), 0, h)).collect();
    let mut arrivals: Vec<u64> = (1..=n_b as u64).collect();
    arrivals.shuffle(&mut rng);
    let buyers = arrivals
        .into_iter()
        .enumerate()
        .map(|(j, a)| {
            let v = rng.gen_range(low.0..=high.0);
            let d = (a + rng.gen_range(0..=2)).min(h);
            TraderType::buyer((n_a + j) as u32 + 1, v, a, d)
        })
        .collect();
    Instance::new(sellers, buyers, true, TimePoint(h))
}

/// Demand does not exceed supply.
pub fn supply_covers_demand(instance: &Instance) -> bool {
    instance.num_buyers() <= instance.num_sellers()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeneralParams {
    pub sellers: usize,
    pub buyers: usize,
    pub horizon: TimePoint,
    /// Minimum seller lifetime.
    pub t: TimePoint,
    pub low: Money,
    pub high: Money,
}

/// Long-horizon market: sellers stay between `t` and `2t` ticks, buyers at
/// most `t/2`. Sellers are `1..=sellers`, buyers follow.
pub fn random_general_instance(seed: u64, p: &GeneralParams) -> Result<Instance> {
    check_range(p.low, p.high)?;
    let (h, t) = (p.horizon.0, p.t.0);
    if t == 0 || t > h {
        return Err(Error::Config(format!("need 0 < t <= horizon, got t = {t}, horizon = {h}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sellers = (0..p.sellers)
        .map(|i| {
            let a = rng.gen_range(0..=h - t);
            let d = (a + t + rng.gen_range(0..=t)).min(h);
            TraderType::seller(i as u32 + 1, rng.gen_range(p.low.0..=p.high.0), a, d)
        })
        .collect();
    let buyers = (0..p.buyers)
        .map(|j| {
            let a = rng.gen_range(0..=h);
            let d = (a + rng.gen_range(0..=t / 2)).min(h);
            TraderType::buyer((p.sellers + j) as u32 + 1, rng.gen_range(p.low.0..=p.high.0), a, d)
        })
        .collect();
    Instance::new(sellers, buyers, false, p.horizon)
}

/// The four-ask, four-bid worked example: asks 2, 3, 5, 8 patient over
/// `[0, 10]`, bids 7, 4, 6, 3 arriving at ticks 1 to 4.
pub fn fig1_instance() -> Instance {
    let sellers = [2, 3, 5, 8].iter().zip(1..).map(|(&v, id)| TraderType::seller(id, v, 0, 10)).collect();
    let buyers = [7, 4, 6, 3].iter().zip(1..).map(|(&v, t)| TraderType::buyer(t as u32 + 4, v, t, t)).collect();
    Instance::new(sellers, buyers, true, TimePoint(10)).expect("valid example")
}

/// One line per trader, sellers first, buyers in arrival order.
pub fn describe(instance: &Instance) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "horizon {} patient {}", instance.horizon(), instance.patient_sellers());
    for t in instance.sellers().iter().chain(instance.buyers()) {
        let _ = writeln!(s, "{} {} v={} [{}, {}]", t.role, t.id, t.v, t.a, t.d);
    }
    s
}
