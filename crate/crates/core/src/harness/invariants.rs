use alloc::format;

use crate::error::{Error, Result};
use crate::market::{check_feasibility, utility, Instance, Outcome};

/// Feasibility, individual rationality for truthful reports, and zero
/// payments for traders who did not trade. `instance` must hold the reports
/// the outcome was computed from, taken as true types.
pub fn check_invariants(instance: &Instance, outcome: &Outcome) -> Result<()> {
    if !check_feasibility(outcome) {
        return Err(Error::Contract("infeasible outcome: traded counts or matching disagree".into()));
    }
    if outcome.allocation.len() != instance.num_sellers() + instance.num_buyers() {
        return Err(Error::Contract(format!(
            "outcome covers {} traders, instance has {}",
            outcome.allocation.len(),
            instance.num_sellers() + instance.num_buyers()
        )));
    }
    for t in instance.traders() {
        let pay = outcome.payment(t.id);
        if !outcome.traded(t.id) && pay.0 != 0 {
            return Err(Error::Contract(format!("{} {} did not trade but has payment {pay}", t.role, t.id)));
        }
        let u = utility(t, outcome)?;
        if u.is_negative() {
            return Err(Error::Contract(format!("{} {} has negative utility {u} when truthful", t.role, t.id)));
        }
    }
    Ok(())
}
