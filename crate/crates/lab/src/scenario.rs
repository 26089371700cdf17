//! Scenario files: a market plus the mechanism to run on it, as TOML.

use oda_core::decomposition::Decomposed;
use oda_core::harness::MatchAtArrival;
use oda_core::onesided::AuctionKind;
use oda_core::{Greedy, Instance, Mechanism, PositionSampler, Reduction, TimePoint, TraderType};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, LabResult};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub mechanism: MechanismSpec,
    pub instance: InstanceSpec,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub horizon: u64,
    pub patient_sellers: bool,
    #[serde(default)]
    pub sellers: Vec<TraderRecord>,
    #[serde(default)]
    pub buyers: Vec<TraderRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraderRecord {
    pub id: u32,
    pub v: u64,
    pub a: u64,
    pub d: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MechanismKind {
    Greedy,
    Reduction,
    Decomposed,
    MatchAtArrival,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuctionName {
    Secretary,
    KSecretary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerName {
    Uniform,
    FixedPositions,
    FrontLoaded,
}

/// Which mechanism to run and its parameters. Fields that do not apply to
/// the chosen kind must be left out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanismSpec {
    pub kind: MechanismKind,
    /// Greedy, alone or per sub-market: overrides the run seed as the
    /// tie-break seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tie_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auction: Option<AuctionName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampler: Option<SamplerName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_override: Option<usize>,
    /// Decomposed only: minimum seller lifetime.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<u64>,
    /// Decomposed only: the mechanism run in each sub-market.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<MechanismKind>,
}

impl MechanismSpec {
    pub fn of(kind: MechanismKind) -> Self {
        MechanismSpec {
            kind,
            tie_seed: None,
            auction: None,
            sampler: None,
            positions: None,
            k_override: None,
            t: None,
            inner: None,
        }
    }

    pub fn greedy() -> Self {
        Self::of(MechanismKind::Greedy)
    }

    pub fn reduction(auction: AuctionName, sampler: SamplerName) -> Self {
        MechanismSpec { auction: Some(auction), sampler: Some(sampler), ..Self::of(MechanismKind::Reduction) }
    }

    pub fn decomposed(inner: MechanismSpec, t: u64) -> Self {
        MechanismSpec { kind: MechanismKind::Decomposed, inner: Some(inner.kind), t: Some(t), ..inner }
    }

    /// The seed the mechanism actually runs with.
    pub fn run_seed(&self, seed: u64) -> u64 {
        match (self.kind, self.inner) {
            (MechanismKind::Greedy, _) | (MechanismKind::Decomposed, None | Some(MechanismKind::Greedy)) => {
                self.tie_seed.unwrap_or(seed)
            }
            _ => seed,
        }
    }

    pub fn build(&self) -> LabResult<Box<dyn Mechanism>> {
        let bad = |m: &str| Err(LabError::Validation(format!("mechanism {:?}: {m}", self.kind)));
        let reduction_fields =
            self.auction.is_some() || self.sampler.is_some() || self.positions.is_some() || self.k_override.is_some();
        match self.kind {
            MechanismKind::Greedy | MechanismKind::MatchAtArrival => {
                if reduction_fields || self.t.is_some() || self.inner.is_some() {
                    return bad("only `tie_seed` applies");
                }
                if self.kind == MechanismKind::MatchAtArrival && self.tie_seed.is_some() {
                    return bad("`tie_seed` does not apply");
                }
                Ok(match self.kind {
                    MechanismKind::Greedy => Box::new(Greedy),
                    _ => Box::new(MatchAtArrival),
                })
            }
            MechanismKind::Reduction => {
                if self.t.is_some() || self.inner.is_some() || self.tie_seed.is_some() {
                    return bad("`t`, `inner` and `tie_seed` do not apply");
                }
                Ok(Box::new(self.reduction_mechanism()?))
            }
            MechanismKind::Decomposed => {
                let Some(t) = self.t else {
                    return bad("`t` is required");
                };
                let inner = MechanismSpec {
                    kind: self.inner.unwrap_or(MechanismKind::Greedy),
                    t: None,
                    inner: None,
                    ..self.clone()
                };
                if matches!(inner.kind, MechanismKind::Decomposed | MechanismKind::MatchAtArrival) {
                    return bad("`inner` must be greedy or reduction");
                }
                Ok(Box::new(Decomposed { inner: inner.build()?, t: TimePoint(t) }))
            }
        }
    }

    fn reduction_mechanism(&self) -> LabResult<Reduction> {
        let auction = match self.auction {
            Some(AuctionName::Secretary) => AuctionKind::Secretary,
            Some(AuctionName::KSecretary) | None => AuctionKind::KSecretary,
        };
        let sampler = match (self.sampler, &self.positions) {
            (Some(SamplerName::FixedPositions), Some(p)) => PositionSampler::FixedPositions(p.clone()),
            (Some(SamplerName::FixedPositions), None) => {
                return Err(LabError::Validation("sampler fixed-positions needs `positions`".into()))
            }
            (_, Some(_)) => return Err(LabError::Validation("`positions` needs sampler fixed-positions".into())),
            (Some(SamplerName::FrontLoaded), None) => PositionSampler::FrontLoaded,
            (Some(SamplerName::Uniform) | None, None) => PositionSampler::UniformRandom,
        };
        Ok(Reduction { auction, sampler, k_override: self.k_override })
    }
}

impl TraderRecord {
    fn of(t: &TraderType) -> Self {
        TraderRecord { id: t.id.0, v: t.v.0, a: t.a.0, d: t.d.0 }
    }
}

impl ScenarioFile {
    pub fn new(instance: &Instance, mechanism: MechanismSpec, seed: Option<u64>) -> Self {
        ScenarioFile {
            schema: SCHEMA,
            seed,
            mechanism,
            instance: InstanceSpec {
                horizon: instance.horizon().0,
                patient_sellers: instance.patient_sellers(),
                sellers: instance.sellers().iter().map(TraderRecord::of).collect(),
                buyers: instance.listed_buyers().iter().map(TraderRecord::of).collect(),
            },
        }
    }

    pub fn parse(text: &str, path: &str) -> LabResult<Self> {
        let s: ScenarioFile =
            toml::from_str(text).map_err(|e| LabError::Parse { path: path.into(), message: e.to_string() })?;
        if s.schema != SCHEMA {
            return Err(LabError::Parse { path: path.into(), message: format!("unsupported schema {}", s.schema) });
        }
        Ok(s)
    }

    /// The trader table: id, role, v, a, d.
    pub fn write_csv(&self, path: &std::path::Path) -> LabResult<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["id", "role", "v", "a", "d"])?;
        let rows = self
            .instance
            .sellers
            .iter()
            .map(|t| (t, "seller"))
            .chain(self.instance.buyers.iter().map(|t| (t, "buyer")));
        for (t, role) in rows {
            w.write_record([t.id.to_string(), role.into(), t.v.to_string(), t.a.to_string(), t.d.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serialises")
    }

    pub fn instance(&self) -> LabResult<Instance> {
        let i = &self.instance;
        let sellers = i.sellers.iter().map(|t| TraderType::seller(t.id, t.v, t.a, t.d)).collect();
        let buyers = i.buyers.iter().map(|t| TraderType::buyer(t.id, t.v, t.a, t.d)).collect();
        Ok(Instance::new(sellers, buyers, i.patient_sellers, TimePoint(i.horizon))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG1: &str = r#"
schema = 1

[mechanism]
kind = "greedy"

[instance]
horizon = 10
patient_sellers = true
sellers = [
  { id = 1, v = 2, a = 0, d = 10 },
  { id = 2, v = 3, a = 0, d = 10 },
]
buyers = [{ id = 5, v = 7, a = 1, d = 1 }]
"#;

    #[test]
    fn parses_and_round_trips() {
        let s = ScenarioFile::parse(FIG1, "fig1.toml").unwrap();
        assert_eq!(s.instance.sellers.len(), 2);
        assert_eq!(s.mechanism, MechanismSpec::greedy());
        let again = ScenarioFile::parse(&s.to_toml(), "x").unwrap();
        assert_eq!(s, again);
        assert_eq!(s.to_toml(), again.to_toml());
        let inst = s.instance().unwrap();
        assert_eq!(ScenarioFile::new(&inst, s.mechanism.clone(), None), s);
    }

    #[test]
    fn rejects_unknown_fields_with_location() {
        let text = FIG1.replace("kind = \"greedy\"", "kind = \"greedy\"\ncolour = 3");
        let e = ScenarioFile::parse(&text, "bad.toml").unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let msg = e.to_string();
        assert!(msg.contains("bad.toml") && msg.contains("colour") && msg.contains("line"), "{msg}");

        let e = ScenarioFile::parse(&FIG1.replace("schema = 1", "schema = 9"), "s.toml").unwrap_err();
        assert!(e.to_string().contains("schema"));
    }

    #[test]
    fn mechanism_validation() {
        assert!(MechanismSpec::greedy().build().is_ok());
        let mut m = MechanismSpec::greedy();
        m.t = Some(3);
        assert_eq!(m.build().err().unwrap().exit_code(), 2);
        let mut m = MechanismSpec::reduction(AuctionName::KSecretary, SamplerName::FixedPositions);
        assert!(m.build().is_err());
        m.positions = Some(vec![1]);
        assert!(m.build().is_ok());
        let d = MechanismSpec::decomposed(MechanismSpec::reduction(AuctionName::KSecretary, SamplerName::Uniform), 4);
        assert_eq!(d.build().unwrap().name(), "decomposed[reduction[k-secretary], t=4]");
        assert!(MechanismSpec::of(MechanismKind::Decomposed).build().is_err());
    }
}
