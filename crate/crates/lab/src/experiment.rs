//! `oda experiment`: batches of seeded tasks described in a TOML config,
//! reported as JSON plus one PASS/FAIL line per task.

use std::path::Path;

use oda_core::decomposition::{rising_market_scenario, RisingParams};
use oda_core::harness::generators::{random_general_instance, random_patient_instance, GeneralParams};
use oda_core::harness::{
    competitive_experiment, test_truthfulness, theorem1_family, DeviationGrid, Oracle, TruthCriterion,
};
use oda_core::mechanism::derive_seed;
use oda_core::onesided::{run_stream, AuctionConfig, AuctionKind};
use oda_core::{optimal_general, social_welfare, Instance, Mechanism, Money, TimePoint};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::acceptance;
use crate::error::{LabError, LabResult};
use crate::scenario::{MechanismSpec, SCHEMA};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub seed: u64,
    #[serde(default)]
    pub task: Vec<TaskSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TaskSpec {
    /// Welfare ratio against a benchmark; passes if every ratio is at least
    /// `guarantee` (when given) and no run breaks an invariant.
    Competitive {
        name: String,
        trials: u64,
        mechanism: MechanismSpec,
        generator: GeneratorSpec,
        benchmark: BenchmarkName,
        #[serde(default)]
        guarantee: Option<[u64; 2]>,
    },
    /// Misreport sweep; passes if no trader profits under `criterion`.
    Truthfulness {
        name: String,
        instances: u64,
        replications: u32,
        mechanism: MechanismSpec,
        generator: GeneratorSpec,
        criterion: CriterionName,
        #[serde(default)]
        values_only: bool,
    },
    /// How often the single-item secretary picks the maximum of a random
    /// permutation; passes if the rate, in parts per million, lies in `band_ppm`.
    Secretary { name: String, n: usize, trials: u64, band_ppm: [u64; 2] },
    /// Match-at-arrival on the lower-bound family; passes if the ratio is
    /// exactly 2/V and strictly decreasing.
    Theorem1 { name: String, values: Vec<u64> },
    /// Runs acceptance criteria by number, all of them if `criteria` is empty.
    Acceptance {
        name: String,
        #[serde(default)]
        criteria: Vec<u8>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchmarkName {
    OptimalPatient,
    OptimalGeneral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriterionName {
    EveryReplay,
    InExpectation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GeneratorSpec {
    RandomPatient { sellers: usize, buyers: usize, low: u64, high: u64 },
    RisingMarket { horizon: u64, t: u64, sellers: usize, buyers: usize, low: u64, high: u64, drift: u64 },
    General { sellers: usize, buyers: usize, horizon: u64, t: u64, low: u64, high: u64 },
}

impl GeneratorSpec {
    pub fn generate(&self, seed: u64) -> oda_core::Result<Instance> {
        match *self {
            GeneratorSpec::RandomPatient { sellers, buyers, low, high } => {
                random_patient_instance(seed, sellers, buyers, Money(low), Money(high))
            }
            GeneratorSpec::RisingMarket { horizon, t, sellers, buyers, low, high, drift } => rising_market_scenario(
                seed,
                &RisingParams {
                    horizon: TimePoint(horizon),
                    t: TimePoint(t),
                    sellers_per_submarket: sellers,
                    buyers_per_submarket: buyers,
                    low: Money(low),
                    high: Money(high),
                    drift: Money(drift),
                },
            ),
            GeneratorSpec::General { sellers, buyers, horizon, t, low, high } => random_general_instance(
                seed,
                &GeneralParams {
                    sellers,
                    buyers,
                    horizon: TimePoint(horizon),
                    t: TimePoint(t),
                    low: Money(low),
                    high: Money(high),
                },
            ),
        }
    }
}

/// The JSON report. Ratios are `[num, den]` pairs and means are in parts
/// per million, so the file holds integers only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentOutput {
    pub schema: u32,
    pub seed: u64,
    pub tasks: Vec<TaskOutput>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskOutput {
    pub name: String,
    pub kind: String,
    pub passed: bool,
    pub summary: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rows: Vec<Row>,
}

/// One line of a task's table; which fields are set depends on the task.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Row {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub welfare: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub benchmark: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<[u64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deficit: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl TaskOutput {
    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.summary)
    }
}

impl ExperimentOutput {
    pub fn all_passed(&self) -> bool {
        self.tasks.iter().all(|t| t.passed)
    }

    /// One line per row, prefixed with its task.
    pub fn write_csv(&self, path: &Path) -> LabResult<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "task",
            "passed",
            "label",
            "seed",
            "welfare",
            "benchmark",
            "ratio_num",
            "ratio_den",
            "deficit",
            "gain",
            "note",
        ])?;
        for t in &self.tasks {
            for r in &t.rows {
                let opt = |x: Option<String>| x.unwrap_or_default();
                w.write_record([
                    t.name.clone(),
                    t.passed.to_string(),
                    r.label.clone(),
                    opt(r.seed.map(|x| x.to_string())),
                    opt(r.welfare.map(|x| x.to_string())),
                    opt(r.benchmark.map(|x| x.to_string())),
                    opt(r.ratio.map(|x| x[0].to_string())),
                    opt(r.ratio.map(|x| x[1].to_string())),
                    opt(r.deficit.map(|x| x.to_string())),
                    opt(r.gain.map(|x| x.to_string())),
                    opt(r.note.clone()),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str, path: &str) -> LabResult<Self> {
        let c: ExperimentConfig =
            toml::from_str(text).map_err(|e| LabError::Parse { path: path.into(), message: e.to_string() })?;
        if c.schema != SCHEMA {
            return Err(LabError::Parse { path: path.into(), message: format!("unsupported schema {}", c.schema) });
        }
        Ok(c)
    }
}

fn ppm(x: f64) -> u64 {
    (x * 1e6).round() as u64
}

fn ratio_pair(r: oda_core::harness::Ratio) -> [u64; 2] {
    [r.num, r.den]
}

/// Runs every task in order. Task `i` draws its seeds from
/// `derive_seed(config.seed, i)`.
pub fn run_experiment(config: &ExperimentConfig, mut each: impl FnMut(&TaskOutput)) -> LabResult<ExperimentOutput> {
    let mut tasks = Vec::new();
    for (i, task) in config.task.iter().enumerate() {
        let out = run_task(task, derive_seed(config.seed, i as u64))?;
        each(&out);
        tasks.push(out);
    }
    Ok(ExperimentOutput { schema: SCHEMA, seed: config.seed, tasks })
}

fn run_task(task: &TaskSpec, seed: u64) -> LabResult<TaskOutput> {
    match task {
        TaskSpec::Competitive { name, trials, mechanism, generator, benchmark, guarantee } => {
            let m = mechanism.build()?;
            let bench = match benchmark {
                BenchmarkName::OptimalPatient => Oracle::Patient,
                BenchmarkName::OptimalGeneral => Oracle::General,
            };
            let report = competitive_experiment(&m, |s| generator.generate(s), *trials, &bench, seed)?;
            let rows = report
                .trials
                .iter()
                .map(|t| Row {
                    label: format!("trial {}", t.index),
                    seed: Some(t.seed),
                    welfare: Some(t.welfare.0),
                    benchmark: t.benchmark_welfare.map(|w| w.0),
                    ratio: t.ratio.map(ratio_pair),
                    deficit: Some(t.deficit.0),
                    note: t.note.clone().or_else(|| t.out_of_guarantee.then(|| "out-of-guarantee".into())),
                    ..Row::default()
                })
                .collect();
            let met = guarantee.map(|[n, d]| report.guarantee(n, d));
            let clean = report.invariant_violations.is_empty();
            let min = report.min_ratio().map_or("none".into(), |r| format!("{}/{}", r.num, r.den));
            let d = report.deficit_stats();
            let summary = format!(
                "{} vs {} over {trials} trials ({} out-of-guarantee): min ratio {min}, mean {} ppm, {} benchmark failures, {} invariant violations, deficit range [{}, {}]{}",
                report.mechanism,
                report.benchmark,
                report.out_of_guarantee(),
                report.mean_ratio().map_or(0, ppm),
                report.failed_trials(),
                report.invariant_violations.len(),
                d.min,
                d.max,
                guarantee.map(|[n, d]| format!(", guarantee {n}/{d}")).unwrap_or_default(),
            );
            Ok(TaskOutput {
                name: name.clone(),
                kind: "competitive".into(),
                passed: clean && met != Some(false),
                summary,
                rows,
            })
        }
        TaskSpec::Truthfulness { name, instances, replications, mechanism, generator, criterion, values_only } => {
            let m = mechanism.build()?;
            let grid = if *values_only { DeviationGrid::values_only() } else { DeviationGrid::default() };
            let crit = match criterion {
                CriterionName::EveryReplay => TruthCriterion::EveryReplay,
                CriterionName::InExpectation => TruthCriterion::InExpectation,
            };
            let mut rows = Vec::new();
            let (mut traders, mut reports) = (0usize, 0usize);
            for i in 0..*instances {
                let s = derive_seed(seed, i);
                let inst = generator.generate(s)?;
                for v in test_truthfulness(&m, &inst, &grid, *replications, derive_seed(s, 1))? {
                    traders += 1;
                    reports += v.tested;
                    if !v.passes(crit) {
                        let (r, gain) = match crit {
                            TruthCriterion::EveryReplay => (v.worst_replay_report, v.worst_replay_delta),
                            TruthCriterion::InExpectation => (v.best_report, v.best_delta_sum),
                        };
                        rows.push(Row {
                            label: format!("instance {i} {} {}", v.role, v.trader),
                            seed: Some(s),
                            gain: Some(gain),
                            note: r.map(|r| format!("reports v={} [{}, {}]", r.v, r.a, r.d)),
                            ..Row::default()
                        });
                    }
                }
            }
            let summary = format!(
                "{} over {instances} instances: {traders} traders, {reports} reports, {} profitable deviations",
                m.name(),
                rows.len()
            );
            Ok(TaskOutput { name: name.clone(), kind: "truthfulness".into(), passed: rows.is_empty(), summary, rows })
        }
        TaskSpec::Secretary { name, n, trials, band_ppm } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut values: Vec<Money> = (1..=*n as u64).map(Money).collect();
            let config = AuctionConfig::new(*n, 1, seed)?;
            let mut hits = 0u64;
            for _ in 0..*trials {
                values.shuffle(&mut rng);
                let d = run_stream(AuctionKind::Secretary, &values, &config)?;
                hits += u64::from(d.iter().zip(&values).any(|(d, v)| d.selected && v.0 == *n as u64));
            }
            let rate = if *trials == 0 { 0 } else { ppm(hits as f64 / *trials as f64) };
            let passed = (band_ppm[0]..=band_ppm[1]).contains(&rate);
            let summary = format!(
                "maximum picked in {hits} of {trials} permutations of {n} ({rate} ppm, band [{}, {}])",
                band_ppm[0], band_ppm[1]
            );
            Ok(TaskOutput { name: name.clone(), kind: "secretary".into(), passed, summary, rows: Vec::new() })
        }
        TaskSpec::Theorem1 { name, values } => {
            let mut rows = Vec::new();
            let mut ratios = Vec::new();
            let mut exact = true;
            for &v in values {
                let inst = theorem1_family(Money(v))?;
                let w = social_welfare(&inst, &oda_core::harness::MatchAtArrival.run(&inst, 0)?)?;
                let opt = optimal_general(&inst)?.welfare;
                let r = oda_core::harness::Ratio::of(w, opt);
                exact &= r == oda_core::harness::Ratio { num: 2, den: v };
                ratios.push(r);
                rows.push(Row {
                    label: format!("V={v}"),
                    welfare: Some(w.0),
                    benchmark: Some(opt.0),
                    ratio: Some(ratio_pair(r)),
                    ..Row::default()
                });
            }
            let decreasing = ratios.windows(2).all(|w| w[0] > w[1]);
            let summary =
                format!("{} family members, ratio 2/V exact {exact}, strictly decreasing {decreasing}", values.len());
            Ok(TaskOutput { name: name.clone(), kind: "theorem1".into(), passed: exact && decreasing, summary, rows })
        }
        TaskSpec::Acceptance { name, criteria } => {
            let ids: Vec<u8> = if criteria.is_empty() { acceptance::ALL.to_vec() } else { criteria.clone() };
            let results = acceptance::run_all(&ids);
            let rows: Vec<Row> = results
                .iter()
                .map(|r| Row {
                    label: format!("{} [{}] {}", if r.passed { "PASS" } else { "FAIL" }, r.id, r.name),
                    note: Some(r.detail.clone()),
                    ..Row::default()
                })
                .collect();
            let failed: Vec<u8> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
            let summary = format!("{} criteria, failed {failed:?}", results.len());
            Ok(TaskOutput { name: name.clone(), kind: "acceptance".into(), passed: failed.is_empty(), summary, rows })
        }
    }
}

pub fn cmd_experiment(config: &Path, out: &Path, each: impl FnMut(&TaskOutput)) -> LabResult<ExperimentOutput> {
    let text = std::fs::read_to_string(config)?;
    let c = ExperimentConfig::parse(&text, &config.display().to_string())?;
    let report = run_experiment(&c, each)?;
    std::fs::write(out, report.to_json())?;
    report.write_csv(&out.with_extension("csv"))?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CONFIG: &str = r#"
schema = 1
seed = 5

[[task]]
kind = "competitive"
name = "greedy-half"
trials = 50
mechanism = { kind = "greedy" }
generator = { kind = "random-patient", sellers = 5, buyers = 4, low = 1, high = 30 }
benchmark = "optimal-patient"
guarantee = [1, 2]

[[task]]
kind = "truthfulness"
name = "greedy-truthful"
instances = 3
replications = 1
mechanism = { kind = "greedy" }
generator = { kind = "random-patient", sellers = 3, buyers = 3, low = 1, high = 6 }
criterion = "every-replay"

[[task]]
kind = "secretary"
name = "calibration"
n = 20
trials = 2000
band_ppm = [300000, 450000]

[[task]]
kind = "theorem1"
name = "lower-bound"
values = [10, 100, 1000]
"#;

    fn integers_only(v: &serde_json::Value) -> bool {
        match v {
            serde_json::Value::Number(n) => !n.is_f64(),
            serde_json::Value::Array(a) => a.iter().all(integers_only),
            serde_json::Value::Object(o) => o.values().all(integers_only),
            _ => true,
        }
    }

    #[test]
    fn runs_a_mixed_config() {
        let c = ExperimentConfig::parse(CONFIG, "exp.toml").unwrap();
        assert_eq!(c.task.len(), 4);
        let mut lines = Vec::new();
        let out = run_experiment(&c, |t| lines.push(t.line())).unwrap();
        assert!(out.all_passed(), "{lines:?}");
        assert_eq!(lines.len(), 4);
        assert_eq!(out.tasks[0].rows.len(), 50);
        assert_eq!(out.tasks[3].rows[1].ratio, Some([2, 100]));
        let json = out.to_json();
        assert!(integers_only(&serde_json::from_str(&json).unwrap()));
        assert_eq!(serde_json::from_str::<ExperimentOutput>(&json).unwrap(), out);
        assert_eq!(run_experiment(&c, |_| {}).unwrap(), out);
    }

    #[test]
    fn config_errors() {
        let bad = CONFIG.replace("trials = 50", "trials = 50\nbogus = 1");
        assert_eq!(ExperimentConfig::parse(&bad, "e").unwrap_err().exit_code(), 2);
        let bad = CONFIG.replace("kind = \"theorem1\"", "kind = \"theorem9\"");
        assert!(ExperimentConfig::parse(&bad, "e").is_err());
        let bad = CONFIG.replace("high = 30 }", "high = 30, extra = 2 }");
        assert!(ExperimentConfig::parse(&bad, "e").is_err());
    }

    #[test]
    fn failing_guarantee_is_reported() {
        let text = r#"
schema = 1
seed = 1
[[task]]
kind = "competitive"
name = "too-strict"
trials = 100
mechanism = { kind = "greedy" }
generator = { kind = "random-patient", sellers = 5, buyers = 5, low = 1, high = 30 }
benchmark = "optimal-patient"
guarantee = [1, 1]
"#;
        let out = run_experiment(&ExperimentConfig::parse(text, "e").unwrap(), |_| {}).unwrap();
        assert!(!out.all_passed());
        assert!(out.tasks[0].line().starts_with("FAIL too-strict"));
    }
}
