//! Result files: one mechanism run as JSON, with a per-trader CSV mirror.

use std::path::Path;

use oda_core::{deficit, social_welfare, utility, EventLog, Instance, Outcome, Role};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, LabResult};
use crate::scenario::SCHEMA;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultFile {
    pub schema: u32,
    pub mechanism: String,
    pub seed: u64,
    pub outcome: OutcomeRecord,
    pub events: Vec<EventRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeRecord {
    /// `[ask, bid]` in match order.
    pub pairs: Vec<[u32; 2]>,
    pub welfare: u64,
    pub deficit: i64,
    pub traders: Vec<TraderRow>,
}

/// One row per trader: sellers in listing order, then buyers in arrival order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraderRow {
    pub id: u32,
    pub role: String,
    pub v: u64,
    pub a: u64,
    pub d: u64,
    pub matched: bool,
    pub counterparty: Option<u32>,
    pub payment: u64,
    pub utility: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventRecord {
    pub time: u64,
    pub kind: String,
    pub ids: Vec<u32>,
    pub money: Option<u64>,
    pub submarket: Option<u32>,
}

impl ResultFile {
    pub fn new(
        instance: &Instance,
        mechanism: String,
        seed: u64,
        outcome: &Outcome,
        log: &EventLog,
    ) -> LabResult<Self> {
        let mut traders = Vec::new();
        for t in instance.sellers().iter().chain(instance.buyers()) {
            traders.push(TraderRow {
                id: t.id.0,
                role: t.role.to_string(),
                v: t.v.0,
                a: t.a.0,
                d: t.d.0,
                matched: outcome.traded(t.id),
                counterparty: outcome.matching.counterparty(t.id).map(|c| c.0),
                payment: outcome.payment(t.id).0,
                utility: utility(t, outcome)?.0,
            });
        }
        let events = log
            .events
            .iter()
            .map(|e| EventRecord {
                time: e.time.0,
                kind: e.kind.as_str().into(),
                ids: e.ids.iter().map(|i| i.0).collect(),
                money: e.money.map(|m| m.0),
                submarket: e.submarket,
            })
            .collect();
        Ok(ResultFile {
            schema: SCHEMA,
            mechanism,
            seed,
            outcome: OutcomeRecord {
                pairs: outcome.matching.pairs.iter().map(|(a, b)| [a.0, b.0]).collect(),
                welfare: social_welfare(instance, outcome)?.0,
                deficit: deficit(outcome).0,
                traders,
            },
            events,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result serialises");
        s.push('\n');
        s
    }

    pub fn parse(text: &str, path: &str) -> LabResult<Self> {
        serde_json::from_str(text).map_err(|e| LabError::Parse { path: path.into(), message: e.to_string() })
    }

    /// Recomputes welfare and deficit from the trader rows and checks the
    /// pairs agree with the rows.
    pub fn verify(&self) -> LabResult<()> {
        let rows = &self.outcome.traders;
        let role = |r: &TraderRow| if r.role == Role::Seller.to_string() { Role::Seller } else { Role::Buyer };
        let welfare: u64 = rows
            .iter()
            .filter(|r| match role(r) {
                Role::Buyer => r.matched,
                Role::Seller => !r.matched,
            })
            .map(|r| r.v)
            .sum();
        let deficit: i64 = rows
            .iter()
            .map(|r| match role(r) {
                Role::Seller => r.payment as i64,
                Role::Buyer => -(r.payment as i64),
            })
            .sum();
        if welfare != self.outcome.welfare || deficit != self.outcome.deficit {
            return Err(LabError::Validation(format!(
                "stored welfare/deficit {}/{} but rows give {welfare}/{deficit}",
                self.outcome.welfare, self.outcome.deficit
            )));
        }
        for &[ask, bid] in &self.outcome.pairs {
            let row = |id| rows.iter().find(|r| r.id == id);
            match (row(ask), row(bid)) {
                (Some(s), Some(b)) if s.counterparty == Some(bid) && b.counterparty == Some(ask) => {}
                _ => return Err(LabError::Validation(format!("pair ({ask}, {bid}) disagrees with trader rows"))),
            }
        }
        Ok(())
    }

    pub fn write_csv(&self, path: &Path) -> LabResult<()> {
        let mut w = csv::Writer::from_path(path)?;
        for row in &self.outcome.traders {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn payment_of(&self, id: u32) -> Option<u64> {
        self.outcome.traders.iter().find(|r| r.id == id).map(|r| r.payment)
    }
}

/// Writes `result` to `out` and its per-trader table next to it with a
/// `.csv` extension.
pub fn write_result(result: &ResultFile, out: &Path) -> LabResult<()> {
    std::fs::write(out, result.to_json())?;
    result.write_csv(&out.with_extension("csv"))
}
