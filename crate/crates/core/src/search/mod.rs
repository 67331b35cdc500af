//! Maximum-expected-utility HTN search.
//!
//! Both engines work in the additive weight space of
//! [`Valuation`](crate::utility::Valuation): a plan's EU decreases strictly
//! with the sum of its operator weights, so best-first search on summed
//! weights with an admissible estimate returns a maximum-EU plan on its
//! first goal expansion, for linear and exponential utilities alike.

mod plan;
mod rc;
mod state;

use std::cmp::Ordering;
use std::time::Duration;

pub use plan::{
    find_plans_planspace, linearize, partial_plan_eu, refine, Application, PartialPlan,
    PlanSpaceSearch, MAX_LINEARIZATIONS,
};
pub use rc::RcModel;
pub use state::{combine, compute_rc_heuristic, expand, find_plans, SearchNode, StateSearch};

use crate::cvtdg::CvtdgError;
use crate::model::{MethodId, ModelError, OpId, Plan, State, TaskNetwork};
use crate::utility::UtilityError;

pub const DEFAULT_MAX_DEPTH: usize = 64;
pub const DEFAULT_MAX_NODES: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bounds {
    /// Maximum number of decompositions on a path.
    pub max_depth: usize,
    /// Maximum number of node expansions.
    pub max_nodes: u64,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            max_depth: DEFAULT_MAX_DEPTH,
            max_nodes: DEFAULT_MAX_NODES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    State,
    PlanSpace,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::State => "state",
            Engine::PlanSpace => "planspace",
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SearchError {
    #[error(
        "planners need an effect-deterministic model (operator outcomes may differ only in cost)"
    )]
    NotEffectDeterministic,
    #[error(transparent)]
    Utility(#[from] UtilityError),
    #[error(transparent)]
    Graph(#[from] CvtdgError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DerivationStep {
    Decompose { method: MethodId },
    Apply { op: OpId },
}

/// One recorded search step: the network task it acted on and what was done.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TraceEntry {
    pub task_id: String,
    pub step: DerivationStep,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub plan: Plan,
    pub eu: f64,
    /// Sum of operator weights; the plan's EU is decreasing in it.
    pub weight: f64,
    /// Decompositions and applications from the initial network, in order.
    pub derivation: Vec<TraceEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SearchOutcome {
    Solved(Solution),
    /// The search space within the depth bound holds no solution.
    Failure,
    /// The depth or node bound cut the search off before a solution was found.
    BoundsExhausted,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SearchStats {
    pub nodes_expanded: u64,
    pub nodes_generated: u64,
    pub pruned_by_depth: u64,
    pub duplicates: u64,
    pub runtime: Duration,
}

/// An expanded node as seen by the heuristic, for admissibility audits.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditRecord {
    pub state: State,
    pub network: TaskNetwork,
    pub depth: usize,
    /// Heuristic weight of the remaining network.
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub outcome: SearchOutcome,
    pub stats: SearchStats,
    pub audit: Vec<AuditRecord>,
    /// Partial plans expanded by the plan-space engine, when audited.
    pub planspace_audit: Vec<PartialPlan>,
}

impl SearchResult {
    pub fn solution(&self) -> Option<&Solution> {
        match &self.outcome {
            SearchOutcome::Solved(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SearchOptions {
    pub bounds: Bounds,
    pub audit: bool,
}

impl SearchOptions {
    pub fn new(bounds: Bounds) -> Self {
        SearchOptions {
            bounds,
            audit: false,
        }
    }

    pub fn audited(mut self) -> Self {
        self.audit = true;
        self
    }
}

/// Fringe key: lower weight first, then fewer remaining tasks, then the
/// lexicographically smaller plan prefix, then insertion order.
#[derive(Debug, Clone)]
pub(crate) struct FringeKey {
    pub f: f64,
    pub remaining: usize,
    pub prefix: Vec<OpId>,
    pub seq: u64,
}

impl PartialEq for FringeKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for FringeKey {}

impl PartialOrd for FringeKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FringeKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.f
            .total_cmp(&other.f)
            .then(self.remaining.cmp(&other.remaining))
            .then_with(|| self.prefix.cmp(&other.prefix))
            .then(self.seq.cmp(&other.seq))
    }
}
