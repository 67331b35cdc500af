//! State-based best-first HTN search guided by the relaxed-model heuristic.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::rc::Rc;
use std::time::Instant;

use log::debug;

use super::rc::RcModel;
use super::{
    AuditRecord, DerivationStep, FringeKey, SearchError, SearchOptions, SearchOutcome,
    SearchResult, SearchStats, Solution, TraceEntry,
};
use crate::model::{applicable, progress, Binding, GroundModel, OpId, Plan, State, TaskNetwork};
use crate::utility::{plan_eu_segmented, UtilitySpec, Valuation};

#[derive(Debug)]
struct TraceLink {
    entry: TraceEntry,
    parent: Option<Rc<TraceLink>>,
}

/// A search node: current state, remaining network and the operators so far.
#[derive(Debug, Clone)]
pub struct SearchNode {
    pub state: State,
    pub network: TaskNetwork,
    pub prefix: Vec<OpId>,
    /// Summed weight of `prefix`.
    pub g: f64,
    /// Heuristic weight of `network`; infinite when it cannot be completed.
    pub h: f64,
    /// Decompositions performed so far.
    pub depth: usize,
    trace: Option<Rc<TraceLink>>,
}

impl SearchNode {
    pub fn f(&self) -> f64 {
        self.g + self.h
    }

    pub fn derivation(&self) -> Vec<TraceEntry> {
        let mut out = Vec::new();
        let mut cur = self.trace.as_ref();
        while let Some(link) = cur {
            out.push(link.entry.clone());
            cur = link.parent.as_ref();
        }
        out.reverse();
        out
    }

    fn extend(&self, task_id: &str, step: DerivationStep) -> Option<Rc<TraceLink>> {
        Some(Rc::new(TraceLink {
            entry: TraceEntry {
                task_id: task_id.to_string(),
                step,
            },
            parent: self.trace.clone(),
        }))
    }
}

/// A state-based search over one ground model and static utility.
#[derive(Debug)]
pub struct StateSearch<'a> {
    model: &'a GroundModel,
    valuation: Valuation,
    rc: RcModel,
    op_weights: Vec<f64>,
}

impl<'a> StateSearch<'a> {
    pub fn new(model: &'a GroundModel, spec: &UtilitySpec) -> Result<Self, SearchError> {
        if !model.is_effect_deterministic() {
            return Err(SearchError::NotEffectDeterministic);
        }
        let valuation = Valuation::new(spec)?;
        let rc = RcModel::new(model, &valuation);
        let op_weights = model
            .operators
            .iter()
            .map(|o| valuation.weight(&o.costs))
            .collect();
        Ok(StateSearch {
            model,
            valuation,
            rc,
            op_weights,
        })
    }

    pub fn valuation(&self) -> &Valuation {
        &self.valuation
    }

    pub fn rc_model(&self) -> &RcModel {
        &self.rc
    }

    pub fn heuristic(&self, state: &State, network: &TaskNetwork) -> f64 {
        self.rc.estimate(state, network)
    }

    pub fn node(&self, state: State, network: TaskNetwork, depth: usize) -> SearchNode {
        let h = self.heuristic(&state, &network);
        SearchNode {
            state,
            network,
            prefix: Vec::new(),
            g: 0.0,
            h,
            depth,
            trace: None,
        }
    }

    pub fn root(&self) -> SearchNode {
        self.node(
            self.model.init.clone(),
            self.model.initial_network.clone(),
            0,
        )
    }

    /// Successors from every unconstrained task: applicable operators for
    /// primitive tasks, applicable methods for compound ones.
    pub fn expand(&self, node: &SearchNode) -> Result<Vec<SearchNode>, SearchError> {
        let model = self.model;
        let mut out = Vec::new();
        for id in node.network.find_unconstrained_tasks() {
            let task = node.network.get(id).expect("unconstrained id exists");
            if model.is_primitive(&task.name) {
                for (op_id, binding) in model.compatible_operators(task, &Binding::new()) {
                    let op = model.operator(op_id);
                    if !applicable(op, &node.state) {
                        continue;
                    }
                    let network = node.network.without(id)?.substitute(&binding);
                    let state = progress(&node.state, op, 0)?;
                    let h = self.heuristic(&state, &network);
                    let mut prefix = node.prefix.clone();
                    prefix.push(op_id);
                    out.push(SearchNode {
                        state,
                        network,
                        prefix,
                        g: node.g + self.op_weights[op_id.index()],
                        h,
                        depth: node.depth,
                        trace: node.extend(id, DerivationStep::Apply { op: op_id }),
                    });
                }
            } else {
                for (mid, binding) in model.compatible_methods(task, &Binding::new()) {
                    let m = model.method(mid);
                    if !applicable(m, &node.state) {
                        continue;
                    }
                    let network = node.network.substitute(&binding).decompose(
                        id,
                        &m.task,
                        &m.subtasks,
                        &m.ordering,
                    )?;
                    let h = self.heuristic(&node.state, &network);
                    out.push(SearchNode {
                        state: node.state.clone(),
                        network,
                        prefix: node.prefix.clone(),
                        g: node.g,
                        h,
                        depth: node.depth + 1,
                        trace: node.extend(id, DerivationStep::Decompose { method: mid }),
                    });
                }
            }
        }
        Ok(out)
    }

    pub fn run(&self, options: SearchOptions) -> Result<SearchResult, SearchError> {
        let start = Instant::now();
        let bounds = options.bounds;
        let mut stats = SearchStats::default();
        let mut audit = Vec::new();
        let mut arena: Vec<Option<SearchNode>> = Vec::new();
        let mut fringe: BinaryHeap<Reverse<(FringeKey, usize)>> = BinaryHeap::new();
        let mut best_g: HashMap<(State, TaskNetwork, usize), f64> = HashMap::new();
        let mut seq = 0u64;

        let mut push =
            |node: SearchNode,
             arena: &mut Vec<Option<SearchNode>>,
             fringe: &mut BinaryHeap<Reverse<(FringeKey, usize)>>| {
                let key = FringeKey {
                    f: node.f(),
                    remaining: node.network.len(),
                    prefix: node.prefix.clone(),
                    seq,
                };
                seq += 1;
                fringe.push(Reverse((key, arena.len())));
                arena.push(Some(node));
            };

        let root = self.root();
        if root.h.is_finite() {
            best_g.insert((root.state.clone(), root.network.clone(), 0), 0.0);
            push(root, &mut arena, &mut fringe);
        }

        let outcome = loop {
            let Some(Reverse((_, idx))) = fringe.pop() else {
                break if stats.pruned_by_depth > 0 {
                    SearchOutcome::BoundsExhausted
                } else {
                    SearchOutcome::Failure
                };
            };
            let node = arena[idx].take().expect("each node is popped once");
            let key = (node.state.clone(), node.network.clone(), node.depth);
            if best_g.get(&key).is_some_and(|g| *g < node.g) {
                stats.duplicates += 1;
                continue;
            }
            if node.network.is_empty() {
                let plan = Plan::new(node.prefix.clone());
                if self.model.is_executable(&plan) {
                    let dists = self.model.plan_distributions(&plan);
                    let eu = plan_eu_segmented(self.valuation.spec(), &dists)?;
                    break SearchOutcome::Solved(Solution {
                        plan,
                        eu,
                        weight: node.g,
                        derivation: node.derivation(),
                    });
                }
                debug!("goal node failed the executability check");
                continue;
            }
            if stats.nodes_expanded >= bounds.max_nodes {
                break SearchOutcome::BoundsExhausted;
            }
            stats.nodes_expanded += 1;
            if options.audit {
                audit.push(AuditRecord {
                    state: node.state.clone(),
                    network: node.network.clone(),
                    depth: node.depth,
                    h: node.h,
                });
            }
            for succ in self.expand(&node)? {
                stats.nodes_generated += 1;
                if succ.depth > bounds.max_depth {
                    stats.pruned_by_depth += 1;
                    continue;
                }
                if !succ.h.is_finite() {
                    continue;
                }
                let key = (succ.state.clone(), succ.network.clone(), succ.depth);
                match best_g.get(&key) {
                    Some(g) if *g <= succ.g => {
                        stats.duplicates += 1;
                        continue;
                    }
                    _ => {
                        best_g.insert(key, succ.g);
                    }
                }
                push(succ, &mut arena, &mut fringe);
            }
        };
        stats.runtime = start.elapsed();
        debug!(
            "state search: {} expanded, {} generated, {:?}",
            stats.nodes_expanded, stats.nodes_generated, stats.runtime
        );
        Ok(SearchResult {
            outcome,
            stats,
            audit,
            planspace_audit: Vec::new(),
        })
    }
}

/// Maximum-EU plan for the model's initial state and network.
pub fn find_plans(
    model: &GroundModel,
    spec: &UtilitySpec,
    options: SearchOptions,
) -> Result<SearchResult, SearchError> {
    StateSearch::new(model, spec)?.run(options)
}

pub fn expand(search: &StateSearch<'_>, node: &SearchNode) -> Result<Vec<SearchNode>, SearchError> {
    search.expand(node)
}

/// Optimistic EU of completing `network` from `state`; `-inf` when the
/// relaxed model cannot reach every task.
pub fn compute_rc_heuristic(search: &StateSearch<'_>, state: &State, network: &TaskNetwork) -> f64 {
    search
        .valuation()
        .eu_of_weight(search.heuristic(state, network))
}

/// EU of a prefix with EU `g` followed by a completion with EU `h`.
pub fn combine(g: f64, h: f64, spec: &UtilitySpec) -> Result<f64, SearchError> {
    Ok(Valuation::new(spec)?.combine(g, h))
}
