//! Exhaustive plan enumeration, used as ground truth for the planners.

use std::collections::{BTreeSet, HashSet};

use crate::model::{
    applicable, progress, substitute_task, unify, Binding, GroundModel, OpId, Plan, State,
    TaskNetwork,
};
use crate::search::Bounds;
use crate::utility::{
    plan_eu_exact_capped, plan_eu_one_switch, UtilityError, UtilitySpec, DEFAULT_TRAJECTORY_CAP,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("enumeration visited more than {0} nodes")]
    NodeCap(u64),
    #[error("the oracle needs an effect-deterministic model")]
    NotEffectDeterministic,
    #[error(transparent)]
    Utility(#[from] UtilityError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPlan {
    pub plan: Plan,
    pub eu: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OracleStats {
    pub nodes_visited: u64,
    pub pruned_by_depth: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Distinct solution plans in lexicographic order of operator ids.
    pub plans: Vec<ScoredPlan>,
    /// Index of the first plan with maximum EU.
    pub best: Option<usize>,
    pub stats: OracleStats,
}

impl OracleResult {
    pub fn best_plan(&self) -> Option<&ScoredPlan> {
        self.best.map(|i| &self.plans[i])
    }
}

/// Every distinct operator sequence that completes `network` from `state`
/// with at most `depth_budget` further decompositions, interleavings
/// included. Method preconditions are checked when decomposing.
pub fn enumerate_plans_from(
    model: &GroundModel,
    state: &State,
    network: &TaskNetwork,
    depth_budget: usize,
    node_cap: u64,
) -> Result<(BTreeSet<Vec<OpId>>, OracleStats), OracleError> {
    if !model.is_effect_deterministic() {
        return Err(OracleError::NotEffectDeterministic);
    }
    let mut plans = BTreeSet::new();
    let mut stats = OracleStats::default();
    let mut visited: HashSet<(State, TaskNetwork, usize, Vec<OpId>)> = HashSet::new();
    let mut stack = vec![(state.clone(), network.clone(), 0usize, Vec::<OpId>::new())];
    while let Some((state, network, depth, prefix)) = stack.pop() {
        if !visited.insert((state.clone(), network.clone(), depth, prefix.clone())) {
            continue;
        }
        stats.nodes_visited += 1;
        if stats.nodes_visited > node_cap {
            return Err(OracleError::NodeCap(node_cap));
        }
        if network.is_empty() {
            plans.insert(prefix);
            continue;
        }
        for id in network.find_unconstrained_tasks() {
            let task = network.get(id).expect("listed task exists");
            for op in &model.operators {
                if op.task.name != task.name {
                    continue;
                }
                let Some(binding) = unify(task, &op.task, &Binding::new()) else {
                    continue;
                };
                if !applicable(op, &state) {
                    continue;
                }
                let next = network
                    .without(id)
                    .expect("listed task exists")
                    .substitute(&binding);
                let mut p = prefix.clone();
                p.push(op.id);
                stack.push((progress(&state, op, 0).expect("applicable"), next, depth, p));
            }
            for m in &model.methods {
                if m.task.name != task.name {
                    continue;
                }
                let Some(binding) = unify(task, &m.task, &Binding::new()) else {
                    continue;
                };
                if !applicable(m, &state) {
                    continue;
                }
                if depth + 1 > depth_budget {
                    stats.pruned_by_depth += 1;
                    continue;
                }
                debug_assert_eq!(substitute_task(task, &binding), m.task);
                let next = network
                    .substitute(&binding)
                    .decompose(id, &m.task, &m.subtasks, &m.ordering)
                    .expect("head matches");
                stack.push((state.clone(), next, depth + 1, prefix.clone()));
            }
        }
    }
    Ok((plans, stats))
}

/// Exact EU of a plan under any utility: trajectory enumeration for static
/// utilities, expected one-switch utility of the final resource otherwise.
pub fn exact_eu(model: &GroundModel, plan: &Plan, spec: &UtilitySpec) -> Result<f64, UtilityError> {
    let dists = model.plan_distributions(plan);
    if spec.is_static() {
        plan_eu_exact_capped(spec, &dists, DEFAULT_TRAJECTORY_CAP)
    } else {
        plan_eu_one_switch(spec, &dists, DEFAULT_TRAJECTORY_CAP)
    }
}

/// All solution plans within the depth bound, each scored exactly.
/// `bounds.max_nodes` caps the number of enumeration nodes.
pub fn oracle_enumerate(
    model: &GroundModel,
    spec: &UtilitySpec,
    bounds: Bounds,
) -> Result<OracleResult, OracleError> {
    let (plans, stats) = enumerate_plans_from(
        model,
        &model.init,
        &model.initial_network,
        bounds.max_depth,
        bounds.max_nodes,
    )?;
    let mut scored = Vec::with_capacity(plans.len());
    let mut best: Option<usize> = None;
    for steps in plans {
        let plan = Plan::new(steps);
        let eu = exact_eu(model, &plan, spec)?;
        if !matches!(best, Some(b) if eu <= scored_eu(&scored, b)) {
            best = Some(scored.len());
        }
        scored.push(ScoredPlan { plan, eu });
    }
    Ok(OracleResult {
        plans: scored,
        best,
        stats,
    })
}

fn scored_eu(plans: &[ScoredPlan], i: usize) -> f64 {
    plans[i].eu
}
