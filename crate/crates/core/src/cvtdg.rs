//! Ground cost-variable task decomposition graph and its bottom-up
//! expected-utility annotations.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use log::warn;

use crate::model::{
    substitute_task, unify, Binding, GroundModel, MethodId, OpId, Task, TaskNetwork,
};
use crate::utility::{UtilityError, UtilitySpec, Valuation};

pub const DEFAULT_K_UNFOLD: usize = 10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CvtdgError {
    #[error(transparent)]
    Utility(#[from] UtilityError),
    #[error("k_unfold must be at least 1")]
    InvalidUnfold,
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("graph has not been annotated")]
    NotAnnotated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Vertex {
    Compound(usize),
    Primitive(usize),
    Method(usize),
}

/// Subtask of a method vertex. `Missing` marks a primitive subtask with no
/// ground operator, which makes the method unusable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Child {
    Vertex(Vertex),
    Missing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompoundVertex {
    pub task: Task,
    pub methods: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrimitiveVertex {
    pub task: Task,
    pub operator: OpId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodVertex {
    pub method: MethodId,
    pub compound: usize,
    pub children: Vec<Child>,
}

#[derive(Debug, Clone, PartialEq)]
struct Annotations {
    valuation: Valuation,
    compound: Vec<f64>,
    primitive: Vec<f64>,
    method: Vec<f64>,
    compound_converged: Vec<bool>,
    method_converged: Vec<bool>,
}

/// Tasks and methods reachable by decomposition from an initial network.
#[derive(Debug, Clone, PartialEq)]
pub struct Cvtdg {
    pub compound: Vec<CompoundVertex>,
    pub primitive: Vec<PrimitiveVertex>,
    pub methods: Vec<MethodVertex>,
    pub roots: Vec<Vertex>,
    /// Dead ends found while building: compound tasks without methods and
    /// primitive tasks without ground operators.
    pub diagnostics: Vec<String>,
    compound_index: HashMap<Task, usize>,
    primitive_index: HashMap<Task, usize>,
    primitive_names: BTreeSet<String>,
    compound_names: BTreeSet<String>,
    annotations: Option<Annotations>,
}

impl Cvtdg {
    pub fn build(model: &GroundModel, network: &TaskNetwork) -> Cvtdg {
        let mut g = Cvtdg {
            compound: Vec::new(),
            primitive: Vec::new(),
            methods: Vec::new(),
            roots: Vec::new(),
            diagnostics: Vec::new(),
            compound_index: HashMap::new(),
            primitive_index: HashMap::new(),
            primitive_names: model.primitive_names().map(String::from).collect(),
            compound_names: model.compound_names().map(String::from).collect(),
            annotations: None,
        };
        let mut queue: Vec<usize> = Vec::new();
        for (_, task) in network.tasks() {
            if model.is_compound(&task.name) {
                let instances: Vec<Task> = if task.is_ground() {
                    vec![task.clone()]
                } else {
                    model
                        .compound_instances(&task.name)
                        .iter()
                        .filter(|t| unify(task, t, &Binding::new()).is_some())
                        .cloned()
                        .collect()
                };
                if instances.is_empty() {
                    g.diagnostics
                        .push(format!("no ground method decomposes `{task}`"));
                }
                for inst in instances {
                    let v = g.add_compound(inst, &mut queue);
                    g.roots.push(v);
                }
            } else {
                let ops = model.compatible_operators(task, &Binding::new());
                if ops.is_empty() {
                    g.diagnostics
                        .push(format!("no ground operator for `{task}`"));
                }
                for (op, _) in ops {
                    let v = g.add_primitive(model.operator(op).task.clone(), op);
                    g.roots.push(v);
                }
            }
        }
        while let Some(ci) = queue.pop() {
            let task = g.compound[ci].task.clone();
            let methods = model.methods_for(&task);
            if methods.is_empty() {
                g.diagnostics
                    .push(format!("compound task `{task}` has no methods (dead end)"));
            }
            for mid in methods {
                let m = model.method(*mid);
                let mut children = Vec::with_capacity(m.subtasks.len());
                for (_, sub) in &m.subtasks {
                    if model.is_primitive(&sub.name) {
                        match model.operator_for(sub) {
                            Some(op) => {
                                children.push(Child::Vertex(g.add_primitive(sub.clone(), op)))
                            }
                            None => {
                                g.diagnostics.push(format!(
                                    "primitive task `{sub}` in method `{m}` has no ground operator"
                                ));
                                children.push(Child::Missing);
                            }
                        }
                    } else {
                        children.push(Child::Vertex(g.add_compound(sub.clone(), &mut queue)));
                    }
                }
                if m.subtasks.is_empty() {
                    warn!("method `{m}` has an empty task network");
                }
                let mi = g.methods.len();
                g.methods.push(MethodVertex {
                    method: *mid,
                    compound: ci,
                    children,
                });
                g.compound[ci].methods.push(mi);
            }
        }
        g.diagnostics.sort();
        g.diagnostics.dedup();
        g
    }

    fn add_compound(&mut self, task: Task, queue: &mut Vec<usize>) -> Vertex {
        if let Some(i) = self.compound_index.get(&task) {
            return Vertex::Compound(*i);
        }
        let i = self.compound.len();
        self.compound_index.insert(task.clone(), i);
        self.compound.push(CompoundVertex {
            task,
            methods: Vec::new(),
        });
        queue.push(i);
        Vertex::Compound(i)
    }

    fn add_primitive(&mut self, task: Task, operator: OpId) -> Vertex {
        if let Some(i) = self.primitive_index.get(&task) {
            return Vertex::Primitive(*i);
        }
        let i = self.primitive.len();
        self.primitive_index.insert(task.clone(), i);
        self.primitive.push(PrimitiveVertex { task, operator });
        Vertex::Primitive(i)
    }

    pub fn vertex_count(&self) -> usize {
        self.compound.len() + self.primitive.len() + self.methods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertex_count() == 0
    }

    pub fn compound_vertex(&self, task: &Task) -> Option<usize> {
        self.compound_index.get(task).copied()
    }

    pub fn primitive_vertex(&self, task: &Task) -> Option<usize> {
        self.primitive_index.get(task).copied()
    }

    pub fn vertex_task(&self, v: Vertex) -> Option<&Task> {
        match v {
            Vertex::Compound(i) => Some(&self.compound[i].task),
            Vertex::Primitive(i) => Some(&self.primitive[i].task),
            Vertex::Method(_) => None,
        }
    }

    /// DFS post-order from the roots; children come before parents.
    fn post_order(&self) -> Vec<Vertex> {
        let mut seen_c = vec![false; self.compound.len()];
        let mut seen_m = vec![false; self.methods.len()];
        let mut order = Vec::new();
        let starts = self
            .roots
            .iter()
            .filter_map(|v| match v {
                Vertex::Compound(i) => Some(*i),
                _ => None,
            })
            .chain(0..self.compound.len());
        for s in starts {
            if seen_c[s] {
                continue;
            }
            seen_c[s] = true;
            let mut stack = vec![(Vertex::Compound(s), 0usize)];
            while let Some(top) = stack.last_mut() {
                let (v, next) = *top;
                top.1 += 1;
                let child = match v {
                    Vertex::Compound(i) => self.compound[i]
                        .methods
                        .get(next)
                        .map(|m| Some(Vertex::Method(*m))),
                    Vertex::Method(i) => self.methods[i].children.get(next).map(|c| match c {
                        Child::Vertex(Vertex::Compound(j)) => Some(Vertex::Compound(*j)),
                        _ => None,
                    }),
                    Vertex::Primitive(_) => None,
                };
                match child {
                    None => {
                        order.push(v);
                        stack.pop();
                    }
                    Some(Some(Vertex::Compound(j))) if !seen_c[j] => {
                        seen_c[j] = true;
                        stack.push((Vertex::Compound(j), 0));
                    }
                    Some(Some(Vertex::Method(j))) if !seen_m[j] => {
                        seen_m[j] = true;
                        stack.push((Vertex::Method(j), 0));
                    }
                    Some(_) => {}
                }
            }
        }
        order
    }

    /// Computes annotations by `k_unfold` rounds of bottom-up min-sum
    /// iteration in weight space, starting from the optimistic value.
    pub fn annotate(
        &mut self,
        model: &GroundModel,
        spec: &UtilitySpec,
        k_unfold: usize,
    ) -> Result<(), CvtdgError> {
        if k_unfold == 0 {
            return Err(CvtdgError::InvalidUnfold);
        }
        let valuation = Valuation::new(spec)?;
        let primitive: Vec<f64> = self
            .primitive
            .iter()
            .map(|p| valuation.weight(&model.operator(p.operator).costs))
            .collect();
        let mut compound = vec![0.0; self.compound.len()];
        let mut method = vec![0.0; self.methods.len()];
        let order = self.post_order();
        for _ in 0..k_unfold {
            let mut changed = false;
            for v in &order {
                match *v {
                    Vertex::Compound(i) => {
                        let w = self.compound_value(i, &method);
                        changed |= w != compound[i];
                        compound[i] = w;
                    }
                    Vertex::Method(i) => {
                        let w = self.method_value(i, &compound, &primitive);
                        changed |= w != method[i];
                        method[i] = w;
                    }
                    Vertex::Primitive(_) => {}
                }
            }
            if !changed {
                break;
            }
        }
        let method_converged: Vec<bool> = (0..self.methods.len())
            .map(|i| self.method_value(i, &compound, &primitive) == method[i])
            .collect();
        let compound_converged: Vec<bool> = (0..self.compound.len())
            .map(|i| self.compound_value(i, &method) == compound[i])
            .collect();
        self.annotations = Some(Annotations {
            valuation,
            compound,
            primitive,
            method,
            compound_converged,
            method_converged,
        });
        Ok(())
    }

    fn compound_value(&self, i: usize, method: &[f64]) -> f64 {
        self.compound[i]
            .methods
            .iter()
            .map(|m| method[*m])
            .fold(f64::INFINITY, f64::min)
    }

    fn method_value(&self, i: usize, compound: &[f64], primitive: &[f64]) -> f64 {
        self.methods[i]
            .children
            .iter()
            .map(|c| match c {
                Child::Vertex(Vertex::Compound(j)) => compound[*j],
                Child::Vertex(Vertex::Primitive(j)) => primitive[*j],
                Child::Vertex(Vertex::Method(_)) | Child::Missing => f64::INFINITY,
            })
            .sum()
    }

    pub fn is_annotated(&self) -> bool {
        self.annotations.is_some()
    }

    fn ann(&self) -> Result<&Annotations, CvtdgError> {
        self.annotations.as_ref().ok_or(CvtdgError::NotAnnotated)
    }

    pub fn valuation(&self) -> Result<&Valuation, CvtdgError> {
        Ok(&self.ann()?.valuation)
    }

    /// Additive weight of a vertex; smaller is better, infinite is unreachable.
    pub fn weight(&self, v: Vertex) -> Result<f64, CvtdgError> {
        let a = self.ann()?;
        Ok(match v {
            Vertex::Compound(i) => a.compound[i],
            Vertex::Primitive(i) => a.primitive[i],
            Vertex::Method(i) => a.method[i],
        })
    }

    /// Expected-utility annotation of a vertex.
    pub fn eu(&self, v: Vertex) -> Result<f64, CvtdgError> {
        Ok(self.ann()?.valuation.eu_of_weight(self.weight(v)?))
    }

    /// False for vertices whose value was still changing after the last round.
    pub fn converged(&self, v: Vertex) -> Result<bool, CvtdgError> {
        let a = self.ann()?;
        Ok(match v {
            Vertex::Compound(i) => a.compound_converged[i],
            Vertex::Method(i) => a.method_converged[i],
            Vertex::Primitive(_) => true,
        })
    }

    /// Ground task vertices whose name matches and whose arguments unify
    /// with a possibly lifted task under `binding`.
    pub fn compatible_groundings(
        &self,
        task: &Task,
        binding: &Binding,
    ) -> Result<Vec<Vertex>, CvtdgError> {
        let compound = self.compound_names.contains(&task.name);
        let primitive = self.primitive_names.contains(&task.name);
        if !compound && !primitive {
            return Err(CvtdgError::UnknownTask(task.name.clone()));
        }
        let resolved = substitute_task(task, binding);
        if resolved.is_ground() {
            let v = if compound {
                self.compound_vertex(&resolved).map(Vertex::Compound)
            } else {
                self.primitive_vertex(&resolved).map(Vertex::Primitive)
            };
            return Ok(v.into_iter().collect());
        }
        let mut out = Vec::new();
        if compound {
            for (i, c) in self.compound.iter().enumerate() {
                if c.task.name == task.name && unify(&resolved, &c.task, &Binding::new()).is_some()
                {
                    out.push(Vertex::Compound(i));
                }
            }
        } else {
            for (i, p) in self.primitive.iter().enumerate() {
                if p.task.name == task.name && unify(&resolved, &p.task, &Binding::new()).is_some()
                {
                    out.push(Vertex::Primitive(i));
                }
            }
        }
        Ok(out)
    }

    /// Smallest weight among the compatible groundings; infinite when none.
    pub fn best_weight(&self, task: &Task, binding: &Binding) -> Result<f64, CvtdgError> {
        let mut best = f64::INFINITY;
        for v in self.compatible_groundings(task, binding)? {
            best = best.min(self.weight(v)?);
        }
        Ok(best)
    }

    /// One line per vertex: kind, vertex, EU.
    pub fn dump_annotations(&self, model: &GroundModel) -> Result<String, CvtdgError> {
        let mut out = String::new();
        for (i, c) in self.compound.iter().enumerate() {
            let v = Vertex::Compound(i);
            let flag = if self.converged(v)? {
                ""
            } else {
                "\tunconverged"
            };
            writeln!(out, "compound\t{}\t{}{flag}", c.task, self.eu(v)?).unwrap();
        }
        for (i, m) in self.methods.iter().enumerate() {
            let v = Vertex::Method(i);
            let flag = if self.converged(v)? {
                ""
            } else {
                "\tunconverged"
            };
            writeln!(
                out,
                "method\t{}\t{}{flag}",
                model.method(m.method),
                self.eu(v)?
            )
            .unwrap();
        }
        for (i, p) in self.primitive.iter().enumerate() {
            writeln!(
                out,
                "primitive\t{}\t{}",
                p.task,
                self.eu(Vertex::Primitive(i))?
            )
            .unwrap();
        }
        Ok(out)
    }
}

pub fn build_cvtdg(model: &GroundModel, network: &TaskNetwork) -> Cvtdg {
    Cvtdg::build(model, network)
}

pub fn annotate_expected_utilities(
    mut graph: Cvtdg,
    model: &GroundModel,
    spec: &UtilitySpec,
    k_unfold: usize,
) -> Result<Cvtdg, CvtdgError> {
    graph.annotate(model, spec, k_unfold)?;
    Ok(graph)
}
