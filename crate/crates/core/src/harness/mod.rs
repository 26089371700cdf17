//! Empirical checks: instance generators, the deviation tester, the
//! competitive-ratio runner, the adversarial family for deterministic
//! mechanisms, and the outcome invariants every run must satisfy.

pub mod deviation;
pub mod experiment;
pub mod generators;
pub mod invariants;
pub mod theorem1;

pub use deviation::{test_truthfulness, DeviationGrid, TruthCriterion, TruthVerdict};
pub use experiment::{competitive_experiment, Benchmark, ExperimentReport, Oracle, Ratio, TrialRecord};
pub use generators::{random_general_instance, random_patient_instance, GeneralParams};
pub use invariants::check_invariants;
pub use theorem1::{theorem1_family, MatchAtArrival};
