//! Scenario generators behind `oda generate`.

use std::collections::BTreeMap;

use oda_core::decomposition::{rising_market_scenario, RisingParams};
use oda_core::harness::generators::{fig1_instance, random_patient_instance};
use oda_core::harness::theorem1_family;
use oda_core::{Money, TimePoint};

use crate::error::{LabError, LabResult};
use crate::scenario::{MechanismKind, MechanismSpec, ScenarioFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenerateKind {
    RandomPatient,
    RisingMarket,
    Theorem1,
    Fig1,
}

impl std::str::FromStr for GenerateKind {
    type Err = LabError;

    fn from_str(s: &str) -> LabResult<Self> {
        Ok(match s {
            "random-patient" => GenerateKind::RandomPatient,
            "rising-market" => GenerateKind::RisingMarket,
            "theorem1" => GenerateKind::Theorem1,
            "fig1" => GenerateKind::Fig1,
            _ => {
                return Err(LabError::Validation(format!(
                    "unknown kind `{s}` (expected random-patient, rising-market, theorem1 or fig1)"
                )))
            }
        })
    }
}

/// `key=value` parameters; every key must be consumed.
#[derive(Debug, Default)]
pub struct Params(BTreeMap<String, String>);

impl Params {
    pub fn parse<S: AsRef<str>>(items: &[S]) -> LabResult<Self> {
        let mut map = BTreeMap::new();
        for item in items.iter().flat_map(|s| s.as_ref().split(',')).filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| LabError::Validation(format!("parameter `{item}` is not key=value")))?;
            if map.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(LabError::Validation(format!("parameter `{k}` given twice")));
            }
        }
        Ok(Params(map))
    }

    pub fn u64(&mut self, key: &str, default: u64) -> LabResult<u64> {
        match self.0.remove(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| LabError::Validation(format!("parameter `{key}`: `{v}` is not a non-negative integer"))),
        }
    }

    pub fn usize(&mut self, key: &str, default: usize) -> LabResult<usize> {
        self.u64(key, default as u64).map(|v| v as usize)
    }

    fn finish(self) -> LabResult<()> {
        match self.0.keys().next() {
            None => Ok(()),
            Some(k) => Err(LabError::Validation(format!("unknown parameter `{k}`"))),
        }
    }
}

/// Builds the scenario for `kind`. `default_seed` seeds the random kinds
/// unless a `seed` parameter is given.
pub fn generate(kind: GenerateKind, mut p: Params, default_seed: u64) -> LabResult<ScenarioFile> {
    let scenario = match kind {
        GenerateKind::Fig1 => ScenarioFile::new(&fig1_instance(), MechanismSpec::greedy(), None),
        GenerateKind::Theorem1 => {
            let v = p.u64("v", 100)?;
            ScenarioFile::new(&theorem1_family(Money(v))?, MechanismSpec::of(MechanismKind::MatchAtArrival), None)
        }
        GenerateKind::RandomPatient => {
            let seed = p.u64("seed", default_seed)?;
            let inst = random_patient_instance(
                seed,
                p.usize("sellers", 4)?,
                p.usize("buyers", 4)?,
                Money(p.u64("low", 1)?),
                Money(p.u64("high", 20)?),
            )?;
            ScenarioFile::new(&inst, MechanismSpec::greedy(), Some(seed))
        }
        GenerateKind::RisingMarket => {
            let seed = p.u64("seed", default_seed)?;
            let d = RisingParams::default();
            let params = RisingParams {
                horizon: TimePoint(p.u64("horizon", d.horizon.0)?),
                t: TimePoint(p.u64("t", d.t.0)?),
                sellers_per_submarket: p.usize("sellers", d.sellers_per_submarket)?,
                buyers_per_submarket: p.usize("buyers", d.buyers_per_submarket)?,
                low: Money(p.u64("low", d.low.0)?),
                high: Money(p.u64("high", d.high.0)?),
                drift: Money(p.u64("drift", d.drift.0)?),
            };
            let inst = rising_market_scenario(seed, &params)?;
            ScenarioFile::new(&inst, MechanismSpec::decomposed(MechanismSpec::greedy(), params.t.0), Some(seed))
        }
    };
    p.finish()?;
    Ok(scenario)
}
