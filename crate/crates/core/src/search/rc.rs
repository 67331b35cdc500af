//! Relaxed classical model of an HTN problem and its h_max values.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use crate::model::{unify, Binding, GroundModel, State, Task, TaskNetwork};
use crate::utility::Valuation;

#[derive(Debug, Clone)]
struct Action {
    pre: Vec<usize>,
    add: Vec<usize>,
    cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Cost(f64);

impl Eq for Cost {}

impl PartialOrd for Cost {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cost {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// State atoms plus one achievement fact per ground task. Primitive actions
/// keep the operator's positive precondition, add its effects and the
/// task's fact, and cost the operator's weight. Method actions need the
/// method's positive precondition and the facts of all subtasks, add the
/// head's fact and cost nothing.
#[derive(Debug, Clone)]
pub struct RcModel {
    atom_count: usize,
    fact_count: usize,
    task_facts: HashMap<Task, usize>,
    tasks_by_name: BTreeMap<String, Vec<(Task, usize)>>,
    actions: Vec<Action>,
    consumers: Vec<Vec<usize>>,
    free: Vec<usize>,
}

impl RcModel {
    pub fn new(model: &GroundModel, valuation: &Valuation) -> Self {
        let atom_count = model.atom_count();
        let mut rc = RcModel {
            atom_count,
            fact_count: atom_count,
            task_facts: HashMap::new(),
            tasks_by_name: BTreeMap::new(),
            actions: Vec::new(),
            consumers: Vec::new(),
            free: Vec::new(),
        };
        for op in &model.operators {
            let fact = rc.task_fact(&op.task);
            let mut add: Vec<usize> = op.outcomes[0].add.iter().map(|a| a.index()).collect();
            add.push(fact);
            rc.actions.push(Action {
                pre: op.pre_pos.iter().map(|a| a.index()).collect(),
                add,
                cost: valuation.weight(&op.costs),
            });
        }
        for m in &model.methods {
            let head = rc.task_fact(&m.task);
            let mut pre: Vec<usize> = m.pre_pos.iter().map(|a| a.index()).collect();
            for (_, sub) in &m.subtasks {
                pre.push(rc.task_fact(sub));
            }
            rc.actions.push(Action {
                pre,
                add: vec![head],
                cost: 0.0,
            });
        }
        rc.consumers = vec![Vec::new(); rc.fact_count];
        for (i, a) in rc.actions.iter_mut().enumerate() {
            a.pre.sort_unstable();
            a.pre.dedup();
            if a.pre.is_empty() {
                rc.free.push(i);
            }
            for f in &a.pre {
                rc.consumers[*f].push(i);
            }
        }
        for list in rc.tasks_by_name.values_mut() {
            list.sort();
        }
        rc
    }

    fn task_fact(&mut self, task: &Task) -> usize {
        if let Some(f) = self.task_facts.get(task) {
            return *f;
        }
        let f = self.fact_count;
        self.fact_count += 1;
        self.task_facts.insert(task.clone(), f);
        self.tasks_by_name
            .entry(task.name.clone())
            .or_default()
            .push((task.clone(), f));
        f
    }

    pub fn fact_count(&self) -> usize {
        self.fact_count
    }

    pub fn action_count(&self) -> usize {
        self.actions.len()
    }

    /// h_max cost of every fact from `state`.
    pub fn hmax(&self, state: &State) -> Vec<f64> {
        let mut cost = vec![f64::INFINITY; self.fact_count];
        let mut waiting: Vec<usize> = self.actions.iter().map(|a| a.pre.len()).collect();
        let mut heap = BinaryHeap::new();
        for atom in state.iter() {
            if atom.index() < self.atom_count {
                cost[atom.index()] = 0.0;
                heap.push(Reverse((Cost(0.0), atom.index())));
            }
        }
        let relax = |a: &Action, base: f64, cost: &mut Vec<f64>, heap: &mut BinaryHeap<_>| {
            let c = base + a.cost;
            for f in &a.add {
                if c < cost[*f] {
                    cost[*f] = c;
                    heap.push(Reverse((Cost(c), *f)));
                }
            }
        };
        for a in &self.free {
            relax(&self.actions[*a], 0.0, &mut cost, &mut heap);
        }
        while let Some(Reverse((Cost(c), f))) = heap.pop() {
            if c > cost[f] {
                continue;
            }
            for a in &self.consumers[f] {
                waiting[*a] -= 1;
                if waiting[*a] == 0 {
                    relax(&self.actions[*a], c, &mut cost, &mut heap);
                }
            }
        }
        cost
    }

    /// Cheapest achievement fact among the ground tasks compatible with `task`.
    pub fn task_cost(&self, costs: &[f64], task: &Task) -> f64 {
        if task.is_ground() {
            return self
                .task_facts
                .get(task)
                .map(|f| costs[*f])
                .unwrap_or(f64::INFINITY);
        }
        self.tasks_by_name
            .get(&task.name)
            .into_iter()
            .flatten()
            .filter(|(t, _)| unify(task, t, &Binding::new()).is_some())
            .map(|(_, f)| costs[*f])
            .fold(f64::INFINITY, f64::min)
    }

    /// Admissible weight estimate for completing `network` from `state`:
    /// the largest h_max value among the network's achievement goals.
    pub fn estimate(&self, state: &State, network: &TaskNetwork) -> f64 {
        if network.is_empty() {
            return 0.0;
        }
        let costs = self.hmax(state);
        network
            .tasks()
            .map(|(_, t)| self.task_cost(&costs, t))
            .fold(0.0, f64::max)
    }
}
