//! Competitive-ratio experiments.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::Result;
use crate::harness::deviation::TruthVerdict;
use crate::harness::generators::supply_covers_demand;
use crate::harness::invariants::check_invariants;
use crate::market::{deficit, social_welfare, Instance};
use crate::mechanism::{derive_seed, Mechanism};
use crate::money::{Money, SignedMoney};
use crate::oracle::{optimal_general, optimal_patient};

/// Exact non-negative fraction.
#[derive(Debug, Clone, Copy, Eq)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    /// `num / den`; a zero denominator gives 1 (nothing to lose).
    pub fn of(num: Money, den: Money) -> Ratio {
        if den.0 == 0 {
            Ratio { num: 1, den: 1 }
        } else {
            Ratio { num: num.0, den: den.0 }
        }
    }

    pub fn at_least(self, num: u64, den: u64) -> bool {
        u128::from(self.num) * u128::from(den) >= u128::from(num) * u128::from(self.den)
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl PartialEq for Ratio {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ratio {
    fn cmp(&self, other: &Self) -> Ordering {
        (u128::from(self.num) * u128::from(other.den)).cmp(&(u128::from(other.num) * u128::from(self.den)))
    }
}

/// The welfare a mechanism is measured against.
pub trait Benchmark {
    fn name(&self) -> String;

    fn welfare(&self, instance: &Instance, seed: u64) -> Result<Money>;
}

/// Offline optima.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Oracle {
    Patient,
    General,
}

impl Benchmark for Oracle {
    fn name(&self) -> String {
        match self {
            Oracle::Patient => "optimal-patient".into(),
            Oracle::General => "optimal-general".into(),
        }
    }

    fn welfare(&self, instance: &Instance, _seed: u64) -> Result<Money> {
        match self {
            Oracle::Patient => optimal_patient(instance).map(|r| r.welfare),
            Oracle::General => optimal_general(instance).map(|r| r.welfare),
        }
    }
}

/// Another mechanism used as the yardstick, run with the trial's seed.
#[derive(Debug, Clone)]
pub struct MechanismBenchmark<M>(pub M);

impl<M: Mechanism> Benchmark for MechanismBenchmark<M> {
    fn name(&self) -> String {
        self.0.name()
    }

    fn welfare(&self, instance: &Instance, seed: u64) -> Result<Money> {
        social_welfare(instance, &self.0.run(instance, seed)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialRecord {
    pub index: u64,
    /// Seed of the generated instance; the mechanism runs with a seed
    /// derived from it.
    pub seed: u64,
    pub welfare: Money,
    pub benchmark_welfare: Option<Money>,
    pub ratio: Option<Ratio>,
    pub deficit: SignedMoney,
    /// More buyers than sellers, outside the setting the half-optimum
    /// guarantee covers.
    pub out_of_guarantee: bool,
    /// Benchmark failure or invariant violation.
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DeficitStats {
    pub min: SignedMoney,
    pub max: SignedMoney,
    pub total: SignedMoney,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentReport {
    pub mechanism: String,
    pub benchmark: String,
    pub master_seed: u64,
    pub trials: Vec<TrialRecord>,
    pub verdicts: Vec<TruthVerdict>,
    pub invariant_violations: Vec<(u64, String)>,
}

impl ExperimentReport {
    pub fn ratios(&self) -> impl Iterator<Item = Ratio> + '_ {
        self.trials.iter().filter_map(|t| t.ratio)
    }

    pub fn min_ratio(&self) -> Option<Ratio> {
        self.ratios().min()
    }

    pub fn mean_ratio(&self) -> Option<f64> {
        let (sum, n) = self.ratios().fold((0.0, 0u64), |(s, n), r| (s + r.as_f64(), n + 1));
        (n > 0).then(|| sum / n as f64)
    }

    /// Every measured ratio of an in-guarantee trial is at least `num / den`.
    pub fn guarantee(&self, num: u64, den: u64) -> bool {
        self.trials.iter().filter(|t| !t.out_of_guarantee).filter_map(|t| t.ratio).all(|r| r.at_least(num, den))
    }

    pub fn out_of_guarantee(&self) -> usize {
        self.trials.iter().filter(|t| t.out_of_guarantee).count()
    }

    pub fn failed_trials(&self) -> usize {
        self.trials.iter().filter(|t| t.ratio.is_none()).count()
    }

    pub fn deficit_stats(&self) -> DeficitStats {
        let Some(first) = self.trials.first() else {
            return DeficitStats::default();
        };
        let mut s = DeficitStats { min: first.deficit, max: first.deficit, ..Default::default() };
        for t in &self.trials {
            s.min = s.min.min(t.deficit);
            s.max = s.max.max(t.deficit);
            s.total += t.deficit;
        }
        s.mean = s.total.0 as f64 / self.trials.len() as f64;
        s
    }
}

/// Runs `trials` seeded trials. Trial `i` generates its instance from
/// `derive_seed(master_seed, i)`; the mechanism and benchmark then run with
/// a seed derived from that. Benchmark errors are recorded on the trial.
pub fn competitive_experiment<M, B, G>(
    mechanism: &M,
    mut generator: G,
    trials: u64,
    benchmark: &B,
    master_seed: u64,
) -> Result<ExperimentReport>
where
    M: Mechanism,
    B: Benchmark,
    G: FnMut(u64) -> Result<Instance>,
{
    let mut report = ExperimentReport {
        mechanism: mechanism.name(),
        benchmark: benchmark.name(),
        master_seed,
        trials: Vec::with_capacity(trials as usize),
        verdicts: Vec::new(),
        invariant_violations: Vec::new(),
    };
    for index in 0..trials {
        let seed = derive_seed(master_seed, index);
        let instance = generator(seed)?;
        let run_seed = derive_seed(seed, 1);
        let outcome = mechanism.run(&instance, run_seed)?;
        if let Err(e) = check_invariants(&instance, &outcome) {
            report.invariant_violations.push((index, e.to_string()));
        }
        let welfare = social_welfare(&instance, &outcome)?;
        let (benchmark_welfare, ratio, note) = match benchmark.welfare(&instance, run_seed) {
            Ok(w) => (Some(w), Some(Ratio::of(welfare, w)), None),
            Err(e) => (None, None, Some(format!("benchmark: {e}"))),
        };
        report.trials.push(TrialRecord {
            index,
            seed,
            welfare,
            benchmark_welfare,
            ratio,
            deficit: deficit(&outcome),
            out_of_guarantee: !supply_covers_demand(&instance),
            note,
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greedy::Greedy;
    use crate::harness::generators::random_patient_instance;
    use crate::market::TimePoint;
    use crate::market::TraderType;
    use alloc::vec;

    #[test]
    fn ratio_arithmetic() {
        assert_eq!(Ratio::of(Money(0), Money(0)), Ratio { num: 1, den: 1 });
        assert_eq!(Ratio { num: 1, den: 2 }, Ratio { num: 2, den: 4 });
        assert!(Ratio { num: 1, den: 2 }.at_least(1, 2));
        assert!(!Ratio { num: 49, den: 100 }.at_least(1, 2));
        assert!(Ratio { num: 1, den: 3 } < Ratio { num: 1, den: 2 });
    }

    #[test]
    fn greedy_ratio_floor() {
        let gen = |s| random_patient_instance(s, 6, 5, Money(1), Money(30));
        let r = competitive_experiment(&Greedy, gen, 200, &Oracle::Patient, 7).unwrap();
        assert_eq!(r.trials.len(), 200);
        assert!(r.guarantee(1, 2), "min {:?}", r.min_ratio());
        assert!(r.invariant_violations.is_empty());
        assert!(r.deficit_stats().min.0 >= 0);
        let again = competitive_experiment(&Greedy, gen, 200, &Oracle::Patient, 7).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn excess_demand_is_labelled() {
        let gen = |s| random_patient_instance(s, 2, 6, Money(1), Money(30));
        let r = competitive_experiment(&Greedy, gen, 20, &Oracle::Patient, 3).unwrap();
        assert_eq!(r.out_of_guarantee(), 20);
        assert!(r.guarantee(1, 1));
    }

    #[test]
    fn zero_welfare_and_self_benchmark() {
        let gen = |s| random_patient_instance(s, 3, 3, Money(0), Money(0));
        let r = competitive_experiment(&Greedy, gen, 10, &Oracle::Patient, 1).unwrap();
        assert!(r.ratios().all(|x| x == Ratio { num: 1, den: 1 }));

        let gen = |s| random_patient_instance(s, 4, 6, Money(1), Money(9));
        let r = competitive_experiment(&Greedy, gen, 50, &MechanismBenchmark(Greedy), 1).unwrap();
        assert!(r.ratios().all(|x| x == Ratio { num: 1, den: 1 }));
        assert_eq!(r.mean_ratio(), Some(1.0));
    }

    #[test]
    fn oracle_errors_are_recorded() {
        let gen =
            |_| Instance::new((0..13).map(|i| TraderType::seller(i, 1, 0, 1)).collect(), vec![], false, TimePoint(1));
        struct Keep;
        impl Mechanism for Keep {
            fn name(&self) -> String {
                "keep".into()
            }
            fn is_randomized(&self) -> bool {
                false
            }
            fn run_logged(
                &self,
                i: &Instance,
                _: u64,
                _: &mut crate::mechanism::EventLog,
            ) -> Result<crate::market::Outcome> {
                Ok(crate::market::Outcome::no_trade(i))
            }
        }
        let r = competitive_experiment(&Keep, gen, 3, &Oracle::General, 0).unwrap();
        assert_eq!(r.failed_trials(), 3);
        assert!(r.trials[0].note.as_deref().unwrap().contains("benchmark"));
    }
}
