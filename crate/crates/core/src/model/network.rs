//! Task networks: tasks keyed by id plus a strict partial order.

use std::collections::{BTreeMap, BTreeSet};

use super::types::{Task, Term};
use super::ModelError;

/// Variable assignment, variable name (with `?`) to object name.
pub type Binding = BTreeMap<String, String>;

/// A set of uniquely identified tasks and a strict partial order over them.
///
/// The order is kept transitively closed, so removing a task never loses an
/// ordering between its predecessors and successors.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct TaskNetwork {
    nodes: BTreeMap<String, Task>,
    order: BTreeSet<(String, String)>,
}

impl TaskNetwork {
    pub fn new(
        nodes: impl IntoIterator<Item = (String, Task)>,
        ordering: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self, ModelError> {
        let mut map = BTreeMap::new();
        for (id, task) in nodes {
            if map.insert(id.clone(), task).is_some() {
                return Err(ModelError::Network(format!("duplicate task id `{id}`")));
            }
        }
        let mut order = BTreeSet::new();
        for (a, b) in ordering {
            for id in [&a, &b] {
                if !map.contains_key(id) {
                    return Err(ModelError::Network(format!(
                        "unknown task id `{id}` in ordering"
                    )));
                }
            }
            order.insert((a, b));
        }
        let net = TaskNetwork {
            nodes: map,
            order: transitive_closure(order),
        };
        if !net.is_strict_partial_order() {
            return Err(ModelError::Network(
                "ordering constraints contain a cycle".into(),
            ));
        }
        Ok(net)
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn get(&self, id: &str) -> Option<&Task> {
        self.nodes.get(id)
    }

    pub fn tasks(&self) -> impl Iterator<Item = (&str, &Task)> {
        self.nodes.iter().map(|(id, t)| (id.as_str(), t))
    }

    /// The closed order relation as `(before, after)` pairs.
    pub fn order(&self) -> &BTreeSet<(String, String)> {
        &self.order
    }

    pub fn precedes(&self, a: &str, b: &str) -> bool {
        self.order.contains(&(a.to_string(), b.to_string()))
    }

    /// Ids of tasks without a predecessor, in id order.
    pub fn find_unconstrained_tasks(&self) -> Vec<&str> {
        let constrained: BTreeSet<&str> = self.order.iter().map(|(_, b)| b.as_str()).collect();
        self.nodes
            .keys()
            .map(String::as_str)
            .filter(|id| !constrained.contains(id))
            .collect()
    }

    pub fn predecessors(&self, id: &str) -> Vec<String> {
        self.order
            .iter()
            .filter(|(_, b)| b == id)
            .map(|(a, _)| a.clone())
            .collect()
    }

    pub fn successors(&self, id: &str) -> Vec<String> {
        self.order
            .iter()
            .filter(|(a, _)| a == id)
            .map(|(_, b)| b.clone())
            .collect()
    }

    /// Removes a task (an executed primitive) together with its order pairs.
    pub fn without(&self, id: &str) -> Result<TaskNetwork, ModelError> {
        if !self.nodes.contains_key(id) {
            return Err(ModelError::Network(format!("no task with id `{id}`")));
        }
        let mut next = self.clone();
        next.nodes.remove(id);
        next.order.retain(|(a, b)| a != id && b != id);
        Ok(next)
    }

    /// Replaces task `id` by the subtasks of a method.
    ///
    /// Subtask `s` receives the fresh id `id.s`. Ordering among subtasks is
    /// kept and every predecessor (successor) of `id` precedes (follows) all
    /// inserted tasks.
    pub fn decompose(
        &self,
        id: &str,
        head: &Task,
        subtasks: &[(String, Task)],
        ordering: &[(String, String)],
    ) -> Result<TaskNetwork, ModelError> {
        let Some(task) = self.nodes.get(id) else {
            return Err(ModelError::Network(format!("no task with id `{id}`")));
        };
        if task != head {
            return Err(ModelError::Network(format!(
                "task `{task}` does not match method head `{head}`"
            )));
        }
        let preds = self.predecessors(id);
        let succs = self.successors(id);
        let mut next = self.without(id)?;

        let fresh = |s: &str| format!("{id}.{s}");
        let mut inner = BTreeSet::new();
        for (sid, st) in subtasks {
            let nid = fresh(sid);
            if next.nodes.insert(nid.clone(), st.clone()).is_some() {
                return Err(ModelError::Network(format!(
                    "fresh id `{nid}` already in use"
                )));
            }
            for p in &preds {
                next.order.insert((p.clone(), nid.clone()));
            }
            for s in &succs {
                next.order.insert((nid.clone(), s.clone()));
            }
        }
        for (a, b) in ordering {
            inner.insert((fresh(a), fresh(b)));
        }
        // Inherited pairs already relate every inserted task to the outside;
        // only the method-internal pairs need closing.
        next.order.extend(transitive_closure(inner));
        debug_assert!(next.is_strict_partial_order());
        Ok(next)
    }

    /// Applies a variable binding to every task.
    pub fn substitute(&self, binding: &Binding) -> TaskNetwork {
        if binding.is_empty() {
            return self.clone();
        }
        let nodes = self
            .nodes
            .iter()
            .map(|(id, t)| (id.clone(), substitute_task(t, binding)))
            .collect();
        TaskNetwork {
            nodes,
            order: self.order.clone(),
        }
    }

    /// Unbound variables occurring in the network.
    pub fn variables(&self) -> BTreeSet<String> {
        self.nodes
            .values()
            .flat_map(|t| t.args.iter())
            .filter_map(|a| match a {
                Term::Var(v) => Some(v.clone()),
                Term::Obj(_) => None,
            })
            .collect()
    }

    /// True when the order is irreflexive and acyclic (checked by topological sort).
    pub fn is_strict_partial_order(&self) -> bool {
        if self.order.iter().any(|(a, b)| a == b) {
            return false;
        }
        let mut indegree: BTreeMap<&str, usize> =
            self.nodes.keys().map(|k| (k.as_str(), 0)).collect();
        for (_, b) in &self.order {
            match indegree.get_mut(b.as_str()) {
                Some(d) => *d += 1,
                None => return false,
            }
        }
        let mut ready: Vec<&str> = indegree
            .iter()
            .filter(|(_, d)| **d == 0)
            .map(|(k, _)| *k)
            .collect();
        let mut seen = 0;
        while let Some(id) = ready.pop() {
            seen += 1;
            for (_, b) in self.order.iter().filter(|(a, _)| a == id) {
                let d = indegree.get_mut(b.as_str()).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.push(b);
                }
            }
        }
        seen == self.nodes.len()
    }
}

pub fn substitute_task(task: &Task, binding: &Binding) -> Task {
    Task {
        name: task.name.clone(),
        args: task
            .args
            .iter()
            .map(|a| match a {
                Term::Var(v) => match binding.get(v) {
                    Some(o) => Term::Obj(o.clone()),
                    None => a.clone(),
                },
                Term::Obj(_) => a.clone(),
            })
            .collect(),
    }
}

/// Extends `binding` so that `pattern` equals the ground task `ground`.
pub fn unify(pattern: &Task, ground: &Task, binding: &Binding) -> Option<Binding> {
    if pattern.name != ground.name || pattern.args.len() != ground.args.len() {
        return None;
    }
    let mut out = binding.clone();
    for (p, g) in pattern.args.iter().zip(&ground.args) {
        let g = g.object()?;
        match p {
            Term::Obj(o) => {
                if o != g {
                    return None;
                }
            }
            Term::Var(v) => match out.get(v) {
                Some(bound) if bound != g => return None,
                Some(_) => {}
                None => {
                    out.insert(v.clone(), g.to_string());
                }
            },
        }
    }
    Some(out)
}

fn transitive_closure(mut order: BTreeSet<(String, String)>) -> BTreeSet<(String, String)> {
    loop {
        let mut added = Vec::new();
        for (a, b) in &order {
            for (c, d) in order.range((b.clone(), String::new())..) {
                if c != b {
                    break;
                }
                if !order.contains(&(a.clone(), d.clone())) {
                    added.push((a.clone(), d.clone()));
                }
            }
        }
        if added.is_empty() {
            return order;
        }
        order.extend(added);
    }
}
