//! Finite misreport grids and the utility-delta tester.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::market::{utility, validate_misreport, Instance, Outcome, Role, TimePoint, TraderId, TraderType};
use crate::mechanism::{derive_seed, Mechanism};
use crate::money::Money;

/// Misreports tried for each trader: every candidate valuation combined
/// with every candidate window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviationGrid {
    /// `v · num / den`, rounded down.
    pub factors: Vec<(u64, u64)>,
    /// `v + offset`, dropped below zero.
    pub offsets: Vec<i64>,
    /// Evenly spaced valuations over `[0, 2·max + 2]`, where `max` is the
    /// largest valuation in the market.
    pub uniform_points: u32,
    /// Each other trader's valuation, one below it and one above it, plus zero.
    pub structural: bool,
    /// `(later arrival, earlier departure)` shifts. The truthful window is
    /// always tried.
    pub window_shrinks: Vec<(u64, u64)>,
}

impl Default for DeviationGrid {
    fn default() -> Self {
        DeviationGrid {
            factors: vec![(1, 2), (3, 4), (5, 4), (3, 2), (2, 1)],
            offsets: vec![-3, -2, -1, 1, 2, 3],
            uniform_points: 8,
            structural: true,
            window_shrinks: vec![(1, 0), (2, 0), (0, 1), (0, 2), (1, 1)],
        }
    }
}

impl DeviationGrid {
    /// Valuation misreports only.
    pub fn values_only() -> Self {
        DeviationGrid { window_shrinks: Vec::new(), ..Self::default() }
    }

    pub fn candidate_values(&self, trader: &TraderType, instance: &Instance) -> BTreeSet<Money> {
        let v = trader.v.0;
        let mut out = BTreeSet::new();
        for &(num, den) in &self.factors {
            if let Some(x) = v.saturating_mul(num).checked_div(den) {
                out.insert(Money(x));
            }
        }
        for &off in &self.offsets {
            if let Some(x) = v.checked_add_signed(off) {
                out.insert(Money(x));
            }
        }
        if self.structural {
            out.insert(Money::ZERO);
            for other in instance.traders().filter(|o| o.id != trader.id) {
                let w = other.v.0;
                out.extend([w.saturating_sub(1), w, w.saturating_add(1)].map(Money));
            }
        }
        if self.uniform_points > 0 {
            let top = 2 * instance.traders().map(|t| t.v.0).max().unwrap_or(0) + 2;
            let n = u64::from(self.uniform_points);
            out.extend((0..=n).map(|i| Money(top * i / n)));
        }
        out
    }

    /// Candidate windows; the count of shrinks that produced an empty window
    /// is returned alongside.
    pub fn candidate_windows(&self, trader: &TraderType) -> (Vec<(TimePoint, TimePoint)>, usize) {
        let mut out = vec![(trader.a, trader.d)];
        let mut skipped = 0;
        for &(da, dd) in &self.window_shrinks {
            match (trader.a.0.checked_add(da), trader.d.0.checked_sub(dd)) {
                (Some(a), Some(d)) if a <= d => {
                    if !out.contains(&(TimePoint(a), TimePoint(d))) {
                        out.push((TimePoint(a), TimePoint(d)));
                    }
                }
                _ => skipped += 1,
            }
        }
        (out, skipped)
    }

    /// Every permitted misreport for `trader`, excluding the truthful report,
    /// and the number of grid points skipped as not permitted.
    pub fn reports(&self, trader: &TraderType, instance: &Instance) -> (Vec<TraderType>, usize) {
        let values = self.candidate_values(trader, instance);
        let (windows, mut skipped) = self.candidate_windows(trader);
        let mut out = Vec::with_capacity(values.len() * windows.len());
        for &(a, d) in &windows {
            for &v in &values {
                let r = trader.with_value(v).with_window(a, d);
                if r == *trader {
                    continue;
                }
                if validate_misreport(trader, &r) {
                    out.push(r);
                } else {
                    skipped += 1;
                }
            }
        }
        (out, skipped)
    }
}

/// How a randomized mechanism's utility deltas are judged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TruthCriterion {
    /// No misreport gains in any pinned replay.
    EveryReplay,
    /// No misreport gains on average over the replays.
    InExpectation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthVerdict {
    pub trader: TraderId,
    pub role: Role,
    pub tested: usize,
    pub skipped: usize,
    pub replications: u32,
    /// Largest summed delta over the replays and the report reaching it;
    /// `None` if no report beats the truth on average.
    pub best_report: Option<TraderType>,
    pub best_delta_sum: i64,
    /// Largest delta seen in a single replay and its report.
    pub worst_replay_report: Option<TraderType>,
    pub worst_replay_delta: i64,
}

impl TruthVerdict {
    pub fn mean_delta(&self) -> f64 {
        self.best_delta_sum as f64 / f64::from(self.replications.max(1))
    }

    pub fn passes(&self, criterion: TruthCriterion) -> bool {
        match criterion {
            TruthCriterion::EveryReplay => self.worst_replay_delta <= 0,
            TruthCriterion::InExpectation => self.best_delta_sum <= 0,
        }
    }
}

/// Replays `mechanism` with each trader's grid misreports and compares the
/// trader's true utility against the truthful run.
///
/// Deterministic mechanisms run once with `seed`. Randomized ones run
/// `replications` times with seeds derived from `seed`; the truthful and the
/// misreport run of a replay share its seed.
pub fn test_truthfulness<M: Mechanism>(
    mechanism: &M,
    instance: &Instance,
    grid: &DeviationGrid,
    replications: u32,
    seed: u64,
) -> Result<Vec<TruthVerdict>> {
    let seeds: Vec<u64> = if mechanism.is_randomized() {
        (0..u64::from(replications.max(1))).map(|r| derive_seed(seed, r)).collect()
    } else {
        vec![seed]
    };
    let truthful: Vec<Outcome> = seeds.iter().map(|&s| mechanism.run(instance, s)).collect::<Result<_>>()?;

    let mut verdicts = Vec::new();
    for trader in instance.traders() {
        let base: Vec<i64> = truthful.iter().map(|o| utility(trader, o).map(|u| u.0)).collect::<Result<_>>()?;
        let (reports, skipped) = grid.reports(trader, instance);
        let mut v = TruthVerdict {
            trader: trader.id,
            role: trader.role,
            tested: reports.len(),
            skipped,
            replications: seeds.len() as u32,
            best_report: None,
            best_delta_sum: 0,
            worst_replay_report: None,
            worst_replay_delta: 0,
        };
        for report in reports {
            let lied = instance.with_report(report)?;
            let mut deltas = Vec::with_capacity(seeds.len());
            for (&s, &u0) in seeds.iter().zip(&base) {
                match mechanism.run(&lied, s) {
                    Ok(out) => deltas.push(utility(trader, &out)?.0 - u0),
                    // The mechanism refuses this report outright, so it is no strategy.
                    Err(Error::Precondition(_) | Error::Routing(_)) => break,
                    Err(e) => return Err(e),
                }
            }
            if deltas.len() < seeds.len() {
                v.tested -= 1;
                v.skipped += 1;
                continue;
            }
            for &delta in &deltas {
                if delta > v.worst_replay_delta {
                    v.worst_replay_delta = delta;
                    v.worst_replay_report = Some(report);
                }
            }
            let sum: i64 = deltas.iter().sum();
            if sum > v.best_delta_sum {
                v.best_delta_sum = sum;
                v.best_report = Some(report);
            }
        }
        verdicts.push(v);
    }
    Ok(verdicts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greedy::{run_greedy, Greedy};
    use crate::market::TraderType;
    use crate::money::SignedMoney;

    fn fig1() -> Instance {
        Instance::new(
            [2, 3, 5, 8].iter().enumerate().map(|(i, &v)| TraderType::seller(i as u32 + 1, v, 0, 10)).collect(),
            [7, 4, 6, 3]
                .iter()
                .enumerate()
                .map(|(i, &v)| TraderType::buyer(i as u32 + 5, v, i as u64 + 1, i as u64 + 3))
                .collect(),
            true,
            TimePoint(10),
        )
        .unwrap()
    }

    #[test]
    fn grid_points_are_permitted() {
        let inst = fig1();
        let grid = DeviationGrid::default();
        for t in inst.traders() {
            let (reports, _) = grid.reports(t, &inst);
            assert!(!reports.is_empty());
            assert!(reports.iter().all(|r| validate_misreport(t, r) && r != t));
        }
        // A one-tick window cannot shrink at all.
        let t = TraderType::buyer(1, 5, 3, 3);
        let (w, skipped) = grid.candidate_windows(&t);
        assert_eq!(w, vec![(TimePoint(3), TimePoint(3))]);
        assert_eq!(skipped, 5);
    }

    #[test]
    fn structural_points_cover_payment_branches() {
        let inst = fig1();
        let vals = DeviationGrid::default().candidate_values(&inst.sellers()[0], &inst);
        for x in [3, 4, 5, 6, 7, 8, 9] {
            assert!(vals.contains(&Money(x)), "missing {x}");
        }
    }

    #[test]
    fn seller_raises_do_not_pay_on_fig1() {
        let inst = fig1();
        let s = inst.sellers()[0];
        let truth = utility(&s, &run_greedy(&inst, 0).unwrap()).unwrap();
        for v in [4, 5] {
            let lied = inst.with_report(s.with_value(Money(v))).unwrap();
            let u = utility(&s, &run_greedy(&lied, 0).unwrap()).unwrap();
            assert!(u <= truth, "report {v}: {u} > {truth}");
        }
    }

    #[test]
    fn identity_report_has_zero_delta() {
        let inst = fig1();
        let grid = DeviationGrid {
            factors: vec![(1, 1)],
            offsets: vec![0],
            uniform_points: 0,
            structural: false,
            window_shrinks: vec![],
        };
        let verdicts = test_truthfulness(&Greedy, &inst, &grid, 1, 0).unwrap();
        assert!(verdicts.iter().all(|v| v.tested == 0 && v.best_delta_sum == 0));
        let out = run_greedy(&inst, 0).unwrap();
        let again = run_greedy(&inst.with_report(inst.buyers()[1]).unwrap(), 0).unwrap();
        assert_eq!(out, again);
    }

    #[test]
    fn unmatched_buyer_overbidding_loses() {
        // Buyer with value 3 is unmatched; the lowest unmatched ask is 8.
        let inst = fig1();
        let b = inst.buyers()[3];
        let out = run_greedy(&inst.with_report(b.with_value(Money(9))).unwrap(), 0).unwrap();
        assert!(out.traded(b.id));
        assert_eq!(utility(&b, &out).unwrap(), SignedMoney(-5));
    }

    #[test]
    fn refused_reports_are_skipped() {
        use crate::decomposition::Decomposed;
        let inst = Instance::new(
            alloc::vec![TraderType::seller(1, 3, 0, 4), TraderType::seller(2, 5, 2, 6)],
            alloc::vec![TraderType::buyer(3, 9, 1, 1), TraderType::buyer(4, 8, 5, 5)],
            false,
            TimePoint(6),
        )
        .unwrap();
        let m = Decomposed { inner: Greedy, t: TimePoint(4) };
        let verdicts = test_truthfulness(&m, &inst, &DeviationGrid::default(), 1, 0).unwrap();
        let seller = verdicts.iter().find(|v| v.trader == TraderId(1)).unwrap();
        assert!(seller.skipped > 0);
    }

    #[test]
    fn greedy_truthful_on_fig1() {
        let verdicts = test_truthfulness(&Greedy, &fig1(), &DeviationGrid::default(), 1, 0).unwrap();
        assert_eq!(verdicts.len(), 8);
        for v in &verdicts {
            assert!(v.passes(TruthCriterion::EveryReplay), "{v:?}");
            assert!(v.tested > 20);
        }
    }
}
