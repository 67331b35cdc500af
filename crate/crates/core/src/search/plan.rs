//! Plan-space best-first search over partial plans, guided by the
//! decomposition-graph annotations.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};
use std::time::Instant;

use log::debug;

use super::{
    DerivationStep, FringeKey, SearchError, SearchOptions, SearchOutcome, SearchResult,
    SearchStats, Solution, TraceEntry,
};
use crate::cvtdg::Cvtdg;
use crate::model::{
    applicable, progress, Binding, GroundModel, MethodId, OpId, Plan, State, Task, TaskNetwork,
};
use crate::utility::{plan_eu_segmented, UtilitySpec, Valuation};

/// Cap on topological orders tried per candidate solution.
pub const MAX_LINEARIZATIONS: usize = 10_000;

/// A recorded decomposition of a network task.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Application {
    pub task_id: String,
    pub task: Task,
    pub method: MethodId,
    /// Predecessors and successors of the task when it was decomposed.
    pub preds: Vec<String>,
    pub succs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartialPlan {
    pub network: TaskNetwork,
    pub applications: Vec<Application>,
    pub bindings: Binding,
    pub depth: usize,
    /// Weight estimate; the partial plan's EU estimate is decreasing in it.
    pub f: f64,
}

impl PartialPlan {
    pub fn root(network: TaskNetwork) -> Self {
        PartialPlan {
            network,
            applications: Vec::new(),
            bindings: Binding::new(),
            depth: 0,
            f: 0.0,
        }
    }

    fn key(&self) -> (TaskNetwork, Vec<(String, MethodId)>) {
        let mut apps: Vec<(String, MethodId)> = self
            .applications
            .iter()
            .map(|a| (a.task_id.clone(), a.method))
            .collect();
        apps.sort();
        (self.network.clone(), apps)
    }

    /// Every task is primitive and ground.
    pub fn is_primitive(&self, model: &GroundModel) -> bool {
        self.network
            .tasks()
            .all(|(_, t)| model.is_primitive(&t.name) && t.is_ground())
    }
}

/// Summed weight estimate of the network's tasks, each at its cheapest
/// compatible grounding. Infinite when some task has none.
pub fn partial_plan_weight(network: &TaskNetwork, graph: &Cvtdg) -> Result<f64, SearchError> {
    let mut w = 0.0;
    for (_, task) in network.tasks() {
        w += graph.best_weight(task, &Binding::new())?;
    }
    Ok(w)
}

/// EU estimate of a partial plan; `-inf` marks a dead partial plan.
pub fn partial_plan_eu(plan: &PartialPlan, graph: &Cvtdg) -> Result<f64, SearchError> {
    let w = partial_plan_weight(&plan.network, graph)?;
    Ok(graph.valuation()?.eu_of_weight(w))
}

/// One successor per (compound task, matching ground method) pair, plus one
/// per compatible operator for primitive tasks with unbound arguments.
pub fn refine(
    plan: &PartialPlan,
    model: &GroundModel,
    graph: &Cvtdg,
) -> Result<Vec<PartialPlan>, SearchError> {
    let mut out = Vec::new();
    for (id, _) in plan.network.tasks() {
        refine_task(plan, id, model, graph, &mut out)?;
    }
    Ok(out)
}

fn refine_task(
    plan: &PartialPlan,
    id: &str,
    model: &GroundModel,
    graph: &Cvtdg,
    out: &mut Vec<PartialPlan>,
) -> Result<(), SearchError> {
    let Some(task) = plan.network.get(id) else {
        return Ok(());
    };
    if model.is_primitive(&task.name) {
        if task.is_ground() {
            return Ok(());
        }
        for (_, binding) in model.compatible_operators(task, &Binding::new()) {
            let network = plan.network.substitute(&binding);
            let mut bindings = plan.bindings.clone();
            bindings.extend(binding);
            out.push(PartialPlan {
                f: partial_plan_weight(&network, graph)?,
                network,
                applications: plan.applications.clone(),
                bindings,
                depth: plan.depth,
            });
        }
        return Ok(());
    }
    for (mid, binding) in model.compatible_methods(task, &Binding::new()) {
        let m = model.method(mid);
        let bound = plan.network.substitute(&binding);
        let network = bound.decompose(id, &m.task, &m.subtasks, &m.ordering)?;
        let mut applications = plan.applications.clone();
        applications.push(Application {
            task_id: id.to_string(),
            task: m.task.clone(),
            method: mid,
            preds: bound.predecessors(id),
            succs: bound.successors(id),
        });
        let mut bindings = plan.bindings.clone();
        bindings.extend(binding);
        out.push(PartialPlan {
            f: partial_plan_weight(&network, graph)?,
            network,
            applications,
            bindings,
            depth: plan.depth + 1,
        });
    }
    Ok(())
}

fn descends(id: &str, ancestor: &str) -> bool {
    id == ancestor
        || (id.len() > ancestor.len()
            && id.starts_with(ancestor)
            && id.as_bytes()[ancestor.len()] == b'.')
}

fn parent_id(id: &str) -> Option<&str> {
    id.rfind('.').map(|i| &id[..i])
}

/// A validated linearization with the decomposition point of every
/// application (the number of operators executed before it).
#[derive(Debug, Clone)]
struct Linearization {
    order: Vec<String>,
    plan: Plan,
    points: Vec<usize>,
}

struct Windows {
    /// Lower bound from primitive predecessors.
    floor: Vec<usize>,
    /// Upper bound from primitive descendants and successors.
    ceiling: Vec<usize>,
    /// Applications that must come no later than each application.
    deps: Vec<Vec<usize>>,
}

fn windows(plan: &PartialPlan, order: &[String]) -> Windows {
    let apps = &plan.applications;
    let n = order.len();
    let mut floor = vec![0; apps.len()];
    let mut ceiling = vec![n; apps.len()];
    let mut deps = vec![Vec::new(); apps.len()];
    for (xi, x) in apps.iter().enumerate() {
        for (pos, pid) in order.iter().enumerate() {
            if x.preds.iter().any(|q| descends(pid, q)) {
                floor[xi] = floor[xi].max(pos + 1);
            }
            if descends(pid, &x.task_id) || x.succs.iter().any(|s| descends(pid, s)) {
                ceiling[xi] = ceiling[xi].min(pos);
            }
        }
        let parent = parent_id(&x.task_id);
        for (yi, y) in apps.iter().enumerate() {
            if yi == xi {
                continue;
            }
            let before = Some(y.task_id.as_str()) == parent
                || x.preds.iter().any(|q| descends(&y.task_id, q))
                || y.succs.iter().any(|s| descends(&x.task_id, s));
            if before {
                deps[xi].push(yi);
            }
        }
    }
    Windows {
        floor,
        ceiling,
        deps,
    }
}

/// Earliest decomposition points consistent with the windows, or `None`.
fn decomposition_points(
    plan: &PartialPlan,
    model: &GroundModel,
    w: &Windows,
    states: &[State],
) -> Option<Vec<usize>> {
    let apps = &plan.applications;
    let mut d = w.floor.clone();
    loop {
        let mut changed = false;
        for xi in 0..apps.len() {
            let lb = w.deps[xi]
                .iter()
                .map(|y| d[*y])
                .fold(w.floor[xi], usize::max)
                .max(d[xi]);
            let m = model.method(apps[xi].method);
            let k = (lb..=w.ceiling[xi]).find(|k| applicable(m, &states[*k]))?;
            if k != d[xi] {
                d[xi] = k;
                changed = true;
            }
        }
        if !changed {
            return Some(d);
        }
    }
}

fn try_linearizations(
    plan: &PartialPlan,
    model: &GroundModel,
    limit: usize,
) -> (Option<Linearization>, bool) {
    let ids: Vec<&str> = plan.network.tasks().map(|(id, _)| id).collect();
    let ops: Vec<OpId> = plan
        .network
        .tasks()
        .map(|(_, t)| {
            model
                .operator_for(t)
                .expect("primitive ground task has an operator")
        })
        .collect();
    let mut budget = limit;
    let mut order: Vec<usize> = Vec::with_capacity(ids.len());
    let mut states = vec![model.init.clone()];
    let mut used = vec![false; ids.len()];
    let mut found = None;
    let exhausted = !dfs(
        plan,
        model,
        &ids,
        &ops,
        &mut order,
        &mut states,
        &mut used,
        &mut budget,
        &mut found,
    ) && found.is_none();
    (found, exhausted)
}

/// Returns false when the budget ran out.
#[allow(clippy::too_many_arguments)]
fn dfs(
    plan: &PartialPlan,
    model: &GroundModel,
    ids: &[&str],
    ops: &[OpId],
    order: &mut Vec<usize>,
    states: &mut Vec<State>,
    used: &mut [bool],
    budget: &mut usize,
    found: &mut Option<Linearization>,
) -> bool {
    if order.len() == ids.len() {
        if *budget == 0 {
            return false;
        }
        *budget -= 1;
        let names: Vec<String> = order.iter().map(|i| ids[*i].to_string()).collect();
        let w = windows(plan, &names);
        if let Some(points) = decomposition_points(plan, model, &w, states) {
            *found = Some(Linearization {
                order: names,
                plan: Plan::new(order.iter().map(|i| ops[*i]).collect()),
                points,
            });
        }
        return true;
    }
    for i in 0..ids.len() {
        if used[i] {
            continue;
        }
        let ready = (0..ids.len()).all(|j| used[j] || !plan.network.precedes(ids[j], ids[i]));
        if !ready {
            continue;
        }
        let op = model.operator(ops[i]);
        let state = states.last().expect("initial state");
        if !applicable(op, state) {
            continue;
        }
        let next = progress(state, op, 0).expect("applicability checked");
        used[i] = true;
        order.push(i);
        states.push(next);
        let ok = dfs(plan, model, ids, ops, order, states, used, budget, found);
        states.pop();
        order.pop();
        used[i] = false;
        if !ok {
            return false;
        }
        if found.is_some() {
            return true;
        }
    }
    true
}

/// First executable linearization, in deterministic order, whose method
/// preconditions can all be met at some admissible decomposition point.
pub fn linearize(plan: &PartialPlan, model: &GroundModel) -> Option<Plan> {
    try_linearizations(plan, model, MAX_LINEARIZATIONS)
        .0
        .map(|l| l.plan)
}

/// Replays a linearization as a state-based derivation.
fn derivation(plan: &PartialPlan, lin: &Linearization) -> Vec<TraceEntry> {
    let apps = &plan.applications;
    let w = windows(plan, &lin.order);
    let mut out = Vec::new();
    let mut done = vec![false; apps.len()];
    for k in 0..=lin.order.len() {
        loop {
            let next = (0..apps.len()).find(|x| {
                !done[*x]
                    && lin.points[*x] == k
                    && w.deps[*x].iter().all(|y| done[*y] || lin.points[*y] < k)
            });
            let Some(x) = next else { break };
            done[x] = true;
            out.push(TraceEntry {
                task_id: apps[x].task_id.clone(),
                step: DerivationStep::Decompose {
                    method: apps[x].method,
                },
            });
        }
        if k < lin.order.len() {
            out.push(TraceEntry {
                task_id: lin.order[k].clone(),
                step: DerivationStep::Apply {
                    op: lin.plan.steps[k],
                },
            });
        }
    }
    out
}

#[derive(Debug)]
pub struct PlanSpaceSearch<'a> {
    model: &'a GroundModel,
    graph: Cvtdg,
    valuation: Valuation,
}

impl<'a> PlanSpaceSearch<'a> {
    pub fn new(
        model: &'a GroundModel,
        spec: &UtilitySpec,
        k_unfold: usize,
    ) -> Result<Self, SearchError> {
        if !model.is_effect_deterministic() {
            return Err(SearchError::NotEffectDeterministic);
        }
        let valuation = Valuation::new(spec)?;
        let mut graph = Cvtdg::build(model, &model.initial_network);
        graph.annotate(model, spec, k_unfold)?;
        Ok(PlanSpaceSearch {
            model,
            graph,
            valuation,
        })
    }

    pub fn graph(&self) -> &Cvtdg {
        &self.graph
    }

    pub fn root(&self) -> Result<PartialPlan, SearchError> {
        let mut root = PartialPlan::root(self.model.initial_network.clone());
        root.f = partial_plan_weight(&root.network, &self.graph)?;
        Ok(root)
    }

    pub fn refine(&self, plan: &PartialPlan) -> Result<Vec<PartialPlan>, SearchError> {
        refine(plan, self.model, &self.graph)
    }

    /// Smallest weight of a valid solution reachable from `plan` within
    /// `depth_budget` further decompositions, by exhaustive refinement.
    pub fn best_completion_weight(
        &self,
        plan: &PartialPlan,
        depth_budget: usize,
    ) -> Result<Option<f64>, SearchError> {
        let mut best: Option<f64> = None;
        let mut seen = HashSet::new();
        let mut stack = vec![plan.clone()];
        let max_depth = plan.depth + depth_budget;
        while let Some(pp) = stack.pop() {
            if !seen.insert(pp.key()) {
                continue;
            }
            if pp.is_primitive(self.model) {
                if linearize(&pp, self.model).is_some() {
                    let w = pp.f;
                    best = Some(best.map_or(w, |b: f64| b.min(w)));
                }
                continue;
            }
            // refining one task at a time reaches every completion
            let Some(first) = pp
                .network
                .tasks()
                .find(|(_, t)| !(self.model.is_primitive(&t.name) && t.is_ground()))
                .map(|(id, _)| id.to_string())
            else {
                continue;
            };
            let mut children = Vec::new();
            refine_task(&pp, &first, self.model, &self.graph, &mut children)?;
            for child in children {
                if child.depth <= max_depth && child.f.is_finite() {
                    stack.push(child);
                }
            }
        }
        Ok(best)
    }

    pub fn run(&self, options: SearchOptions) -> Result<SearchResult, SearchError> {
        let start = Instant::now();
        let bounds = options.bounds;
        let mut stats = SearchStats::default();
        let mut audit = Vec::new();
        let mut arena: Vec<Option<PartialPlan>> = Vec::new();
        let mut fringe: BinaryHeap<Reverse<(FringeKey, usize)>> = BinaryHeap::new();
        let mut seen = HashSet::new();
        let mut seq = 0u64;
        let mut truncated = false;

        let root = self.root()?;
        if root.f.is_finite() {
            seen.insert(root.key());
            fringe.push(Reverse((
                FringeKey {
                    f: root.f,
                    remaining: root.network.len(),
                    prefix: Vec::new(),
                    seq,
                },
                0,
            )));
            seq += 1;
            arena.push(Some(root));
        }

        let outcome = loop {
            let Some(Reverse((_, idx))) = fringe.pop() else {
                break if stats.pruned_by_depth > 0 || truncated {
                    SearchOutcome::BoundsExhausted
                } else {
                    SearchOutcome::Failure
                };
            };
            let pp = arena[idx].take().expect("each partial plan is popped once");
            if pp.is_primitive(self.model) {
                let (lin, exhausted) = try_linearizations(&pp, self.model, MAX_LINEARIZATIONS);
                truncated |= exhausted;
                if let Some(lin) = lin {
                    let dists = self.model.plan_distributions(&lin.plan);
                    let eu = plan_eu_segmented(self.valuation.spec(), &dists)?;
                    break SearchOutcome::Solved(Solution {
                        derivation: derivation(&pp, &lin),
                        plan: lin.plan,
                        eu,
                        weight: pp.f,
                    });
                }
                continue;
            }
            if stats.nodes_expanded >= bounds.max_nodes {
                break SearchOutcome::BoundsExhausted;
            }
            stats.nodes_expanded += 1;
            for child in self.refine(&pp)? {
                stats.nodes_generated += 1;
                if child.depth > bounds.max_depth {
                    stats.pruned_by_depth += 1;
                    continue;
                }
                if !child.f.is_finite() {
                    continue;
                }
                if !seen.insert(child.key()) {
                    stats.duplicates += 1;
                    continue;
                }
                fringe.push(Reverse((
                    FringeKey {
                        f: child.f,
                        remaining: child.network.len(),
                        prefix: Vec::new(),
                        seq,
                    },
                    arena.len(),
                )));
                seq += 1;
                arena.push(Some(child));
            }
            if options.audit {
                audit.push(pp);
            }
        };
        stats.runtime = start.elapsed();
        debug!(
            "plan-space search: {} expanded, {} generated, {:?}",
            stats.nodes_expanded, stats.nodes_generated, stats.runtime
        );
        Ok(SearchResult {
            outcome,
            stats,
            audit: Vec::new(),
            planspace_audit: audit,
        })
    }
}

pub fn find_plans_planspace(
    model: &GroundModel,
    spec: &UtilitySpec,
    options: SearchOptions,
    k_unfold: usize,
) -> Result<SearchResult, SearchError> {
    PlanSpaceSearch::new(model, spec, k_unfold)?.run(options)
}
