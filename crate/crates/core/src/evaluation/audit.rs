//! Admissibility checks of recorded search nodes against exhaustive search.

use super::oracle::{enumerate_plans_from, exact_eu, OracleError};
use crate::model::{GroundModel, Plan};
use crate::search::{AuditRecord, PartialPlan, PlanSpaceSearch, SearchError};
use crate::utility::{UtilitySpec, Valuation};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AuditReport {
    /// Nodes with at least one completion inside the bound.
    pub checked: usize,
    /// Nodes whose estimate was below the best completion.
    pub violations: Vec<String>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AuditError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Utility(#[from] crate::utility::UtilityError),
}

fn tolerance(x: f64) -> f64 {
    1e-9 * x.abs().max(1.0)
}

/// For each state-search node, compares the heuristic EU of completing the
/// network against the best EU of any suffix plan the oracle finds.
pub fn audit_state_search(
    model: &GroundModel,
    spec: &UtilitySpec,
    records: &[AuditRecord],
    max_depth: usize,
    node_cap: u64,
) -> Result<AuditReport, AuditError> {
    let valuation = Valuation::new(spec)?;
    let mut report = AuditReport::default();
    for (i, r) in records.iter().enumerate() {
        let budget = max_depth.saturating_sub(r.depth);
        let (suffixes, _) = enumerate_plans_from(model, &r.state, &r.network, budget, node_cap)?;
        let mut best = f64::NEG_INFINITY;
        for s in suffixes {
            best = best.max(exact_eu(model, &Plan::new(s), spec)?);
        }
        if best == f64::NEG_INFINITY {
            continue;
        }
        report.checked += 1;
        let h = valuation.eu_of_weight(r.h);
        if h < best - tolerance(best) {
            report.violations.push(format!(
                "node {i}: estimate {h} below best completion {best}"
            ));
        }
    }
    Ok(report)
}

/// For each plan-space node, compares `f` in EU against the best valid
/// completion found by exhaustive refinement.
pub fn audit_planspace_search(
    search: &PlanSpaceSearch<'_>,
    records: &[PartialPlan],
    max_depth: usize,
) -> Result<AuditReport, AuditError> {
    let valuation = search.graph().valuation().map_err(SearchError::from)?;
    let mut report = AuditReport::default();
    for (i, pp) in records.iter().enumerate() {
        let budget = max_depth.saturating_sub(pp.depth);
        let Some(best_w) = search.best_completion_weight(pp, budget)? else {
            continue;
        };
        report.checked += 1;
        let best = valuation.eu_of_weight(best_w);
        let f = valuation.eu_of_weight(pp.f);
        if f < best - tolerance(best) {
            report.violations.push(format!(
                "node {i}: estimate {f} below best completion {best}"
            ));
        }
    }
    Ok(report)
}
