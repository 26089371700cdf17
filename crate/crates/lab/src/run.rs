//! `oda run`: one mechanism on one scenario.

use std::path::Path;

use oda_core::EventLog;

use crate::error::{LabError, LabResult};
use crate::results::{write_result, ResultFile};
use crate::scenario::ScenarioFile;

/// Environment variable holding the default seed.
pub const SEED_ENV: &str = "ODA_SEED";

/// Flag, then scenario, then `ODA_SEED`, then 0.
pub fn resolve_seed(flag: Option<u64>, scenario: Option<u64>, env: Option<&str>) -> LabResult<u64> {
    if let Some(s) = flag.or(scenario) {
        return Ok(s);
    }
    match env {
        None => Ok(0),
        Some(v) => v.trim().parse().map_err(|_| LabError::Validation(format!("{SEED_ENV}=`{v}` is not a u64 seed"))),
    }
}

pub fn env_seed() -> Option<String> {
    std::env::var(SEED_ENV).ok()
}

pub fn load_scenario(path: &Path) -> LabResult<ScenarioFile> {
    let text = std::fs::read_to_string(path)?;
    ScenarioFile::parse(&text, &path.display().to_string())
}

pub fn run_scenario(scenario: &ScenarioFile, seed: u64) -> LabResult<ResultFile> {
    let instance = scenario.instance()?;
    let mechanism = scenario.mechanism.build()?;
    let run_seed = scenario.mechanism.run_seed(seed);
    let mut log = EventLog::new();
    let outcome = mechanism.run_logged(&instance, run_seed, &mut log)?;
    let result = ResultFile::new(&instance, mechanism.name(), seed, &outcome, &log)?;
    result.verify()?;
    Ok(result)
}

pub fn cmd_run(scenario: &Path, out: &Path, seed: Option<u64>) -> LabResult<ResultFile> {
    let s = load_scenario(scenario)?;
    let seed = resolve_seed(seed, s.seed, env_seed().as_deref())?;
    let result = run_scenario(&s, seed)?;
    write_result(&result, out)?;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, GenerateKind, Params};

    #[test]
    fn seed_precedence() {
        assert_eq!(resolve_seed(Some(1), Some(2), Some("3")).unwrap(), 1);
        assert_eq!(resolve_seed(None, Some(2), Some("3")).unwrap(), 2);
        assert_eq!(resolve_seed(None, None, Some("3")).unwrap(), 3);
        assert_eq!(resolve_seed(None, None, None).unwrap(), 0);
        assert!(resolve_seed(None, None, Some("x")).is_err());
    }

    #[test]
    fn fig1_result() {
        let s = generate(GenerateKind::Fig1, Params::default(), 0).unwrap();
        let r = run_scenario(&s, 0).unwrap();
        assert_eq!(r.outcome.pairs, [[1, 5], [2, 6], [3, 7]]);
        let pay: Vec<u64> = (1..=8).map(|i| r.payment_of(i).unwrap()).collect();
        assert_eq!(pay, [5, 5, 6, 0, 2, 3, 5, 0]);
        assert_eq!(r.outcome.deficit, 6);
        assert_eq!(r.outcome.welfare, 7 + 4 + 6 + 8);
        assert_eq!(ResultFile::parse(&r.to_json(), "r").unwrap(), r);
    }

    #[test]
    fn tampered_result_fails_verification() {
        let s = generate(GenerateKind::Fig1, Params::default(), 0).unwrap();
        let mut r = run_scenario(&s, 0).unwrap();
        r.outcome.welfare += 1;
        assert!(r.verify().is_err());
        let mut r = run_scenario(&s, 0).unwrap();
        r.outcome.traders[0].counterparty = Some(8);
        assert!(r.verify().is_err());
    }
}
