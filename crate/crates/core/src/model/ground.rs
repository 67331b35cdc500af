//! Problems, full typed grounding, applicability and state progression.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use super::domain::{check_ordering, check_task_id, Domain, Outcome};
use super::network::{unify, Binding, TaskNetwork};
use super::state::{AtomId, State};
use super::types::{Atom, Literal, Param, Task, Term, Universe};
use super::{GroundError, ModelError, ValidationError};
use crate::utility::CostDistribution;

/// A planning problem `<s0, tn0>` over a universe of typed objects.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub universe: Universe,
    pub init: BTreeSet<Atom>,
    /// Initial task network; task arguments may be variables.
    pub network: TaskNetwork,
}

impl Problem {
    pub fn new(
        domain: &Domain,
        objects: BTreeMap<String, String>,
        init: BTreeSet<Atom>,
        network: TaskNetwork,
    ) -> Result<Self, ValidationError> {
        for (obj, ty) in &objects {
            if !domain.types.contains(ty) {
                return Err(ValidationError::new(
                    format!("objects.{obj}"),
                    format!("unknown object type `{ty}`"),
                ));
            }
        }
        let universe = Universe::new(domain.types.clone(), objects)
            .map_err(|e| ValidationError::new("objects", e.to_string()))?;
        for (i, atom) in init.iter().enumerate() {
            let path = format!("init[{i}]");
            let Some(sig) = domain.predicates.get(&atom.predicate) else {
                return Err(ValidationError::new(
                    path,
                    format!("undeclared predicate `{}`", atom.predicate),
                ));
            };
            if sig.len() != atom.args.len() {
                return Err(ValidationError::new(
                    path,
                    format!("arity mismatch in `{atom}`"),
                ));
            }
            for (arg, ty) in atom.args.iter().zip(sig) {
                if !universe.has_object_of(arg, ty) {
                    return Err(ValidationError::new(
                        path,
                        format!("`{arg}` is not an object of type `{ty}` in `{atom}`"),
                    ));
                }
            }
        }
        for (id, task) in network.tasks() {
            let path = format!("tasks.subtasks[{id}]");
            check_task_id(&path, id)?;
            let Some(sig) = domain.task_signature(&task.name) else {
                return Err(ValidationError::new(
                    path,
                    format!("unknown task `{}`", task.name),
                ));
            };
            if sig.len() != task.args.len() {
                return Err(ValidationError::new(
                    path,
                    format!("arity mismatch in `{task}`"),
                ));
            }
            for (arg, ty) in task.args.iter().zip(&sig) {
                if let Term::Obj(o) = arg {
                    if !universe.has_object_of(o, ty) {
                        return Err(ValidationError::new(
                            path,
                            format!("`{o}` is not an object of type `{ty}`"),
                        ));
                    }
                }
            }
        }
        let ids: BTreeSet<&str> = network.tasks().map(|(id, _)| id).collect();
        let ordering: Vec<(String, String)> = network.order().iter().cloned().collect();
        check_ordering("tasks.ordering", &ids, &ordering)?;
        Ok(Problem {
            universe,
            init,
            network,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OpId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MethodId(pub u32);

impl OpId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl MethodId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundOutcome {
    pub probability: f64,
    pub add: Vec<AtomId>,
    pub del: Vec<AtomId>,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundOperator {
    pub id: OpId,
    /// The primitive task this operator accomplishes; `pt(o)` plus arguments.
    pub task: Task,
    pub pre_pos: Vec<AtomId>,
    pub pre_neg: Vec<AtomId>,
    pub outcomes: Vec<GroundOutcome>,
    pub costs: CostDistribution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundMethod {
    pub id: MethodId,
    pub name: String,
    /// Values of the method parameters, in declaration order.
    pub args: Vec<String>,
    pub task: Task,
    pub pre_pos: Vec<AtomId>,
    pub pre_neg: Vec<AtomId>,
    pub subtasks: Vec<(String, Task)>,
    pub ordering: Vec<(String, String)>,
}

impl fmt::Display for GroundMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        super::types::write_call(f, &self.name, self.args.iter().map(String::as_str))
    }
}

/// Anything with a ground precondition.
pub trait Preconditioned {
    fn positive_precondition(&self) -> &[AtomId];
    fn negative_precondition(&self) -> &[AtomId];
}

impl Preconditioned for GroundOperator {
    fn positive_precondition(&self) -> &[AtomId] {
        &self.pre_pos
    }
    fn negative_precondition(&self) -> &[AtomId] {
        &self.pre_neg
    }
}

impl Preconditioned for GroundMethod {
    fn positive_precondition(&self) -> &[AtomId] {
        &self.pre_pos
    }
    fn negative_precondition(&self) -> &[AtomId] {
        &self.pre_neg
    }
}

/// Every positive precondition atom holds and no negated one does.
pub fn applicable<P: Preconditioned + ?Sized>(item: &P, state: &State) -> bool {
    item.positive_precondition()
        .iter()
        .all(|a| state.contains(*a))
        && item
            .negative_precondition()
            .iter()
            .all(|a| !state.contains(*a))
}

/// `(state \ del_i) ∪ add_i` for outcome `i` of an applicable operator.
pub fn progress(state: &State, op: &GroundOperator, outcome: usize) -> Result<State, ModelError> {
    let Some(out) = op.outcomes.get(outcome) else {
        return Err(ModelError::InvalidOutcome {
            operator: op.task.to_string(),
            index: outcome,
        });
    };
    if !applicable(op, state) {
        return Err(ModelError::Inapplicable(op.task.to_string()));
    }
    let mut next = state.clone();
    for a in &out.del {
        next.remove(*a);
    }
    for a in &out.add {
        next.insert(*a);
    }
    Ok(next)
}

/// A sequence of ground operators.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Plan {
    pub steps: Vec<OpId>,
}

impl Plan {
    pub fn new(steps: Vec<OpId>) -> Self {
        Plan { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GroundOptions {
    /// Drop instances whose preconditions need a rigid atom that is absent
    /// from the initial state (or forbid one that is present).
    pub relevance_filter: bool,
}

impl Default for GroundOptions {
    fn default() -> Self {
        GroundOptions {
            relevance_filter: true,
        }
    }
}

/// Ground operators and methods of a problem. Immutable once built.
#[derive(Debug, Clone)]
pub struct GroundModel {
    pub domain_name: String,
    pub universe: Universe,
    atoms: Vec<Atom>,
    atom_index: HashMap<Atom, AtomId>,
    pub operators: Vec<GroundOperator>,
    pub methods: Vec<GroundMethod>,
    op_index: HashMap<Task, OpId>,
    ops_by_name: BTreeMap<String, Vec<OpId>>,
    methods_by_task: HashMap<Task, Vec<MethodId>>,
    compound_instances: BTreeMap<String, Vec<Task>>,
    primitive_names: BTreeSet<String>,
    compound_names: BTreeSet<String>,
    pub init: State,
    pub initial_network: TaskNetwork,
    effect_deterministic: bool,
}

impl GroundModel {
    pub fn ground(domain: &Domain, problem: &Problem) -> Result<Self, GroundError> {
        Self::ground_with(domain, problem, GroundOptions::default())
    }

    pub fn ground_with(
        domain: &Domain,
        problem: &Problem,
        options: GroundOptions,
    ) -> Result<Self, GroundError> {
        let universe = &problem.universe;
        let mut g = Grounder {
            domain,
            universe,
            atoms: Vec::new(),
            atom_index: HashMap::new(),
        };
        for atom in &problem.init {
            g.intern(atom.clone());
        }
        let init_atoms: BTreeSet<Atom> = problem.init.clone();

        let rigid: BTreeSet<&str> = domain
            .predicates
            .keys()
            .map(String::as_str)
            .filter(|p| {
                !domain.operators.iter().any(|o| {
                    o.outcomes
                        .iter()
                        .any(|out| out.add.iter().chain(&out.del).any(|l| l.predicate == *p))
                })
            })
            .collect();
        let relevant = |lits: &[(Atom, bool)]| -> bool {
            lits.iter().all(|(atom, negated)| {
                !rigid.contains(atom.predicate.as_str()) || init_atoms.contains(atom) != *negated
            })
        };

        let mut operators = Vec::new();
        for op in &domain.operators {
            for binding in assignments(universe, &op.params) {
                let pre = g.literals(&op.precondition, &binding)?;
                if options.relevance_filter && !relevant(&pre) {
                    continue;
                }
                let outcomes = op
                    .outcomes
                    .iter()
                    .map(|o| g.outcome(o, &binding))
                    .collect::<Result<Vec<_>, _>>()?;
                let costs = CostDistribution::new(
                    outcomes.iter().map(|o| (o.probability, o.cost)).collect(),
                )
                .map_err(|e| GroundError::Invalid(e.to_string()))?;
                let (pre_pos, pre_neg) = g.split(pre);
                operators.push(GroundOperator {
                    id: OpId(operators.len() as u32),
                    task: Task::new(
                        op.name.clone(),
                        params_values(&op.params, &binding).map(Term::Obj).collect(),
                    ),
                    pre_pos,
                    pre_neg,
                    outcomes,
                    costs,
                });
            }
        }

        let mut methods = Vec::new();
        for m in &domain.methods {
            for binding in assignments(universe, &m.params) {
                let task = g.task(&m.task, &binding)?;
                let pre = g.literals(&m.precondition, &binding)?;
                if options.relevance_filter && !relevant(&pre) {
                    continue;
                }
                let subtasks = m
                    .subtasks
                    .iter()
                    .map(|s| Ok((s.id.clone(), g.task(&s.task, &binding)?)))
                    .collect::<Result<Vec<_>, GroundError>>()?;
                let (pre_pos, pre_neg) = g.split(pre);
                methods.push(GroundMethod {
                    id: MethodId(methods.len() as u32),
                    name: m.name.clone(),
                    args: params_values(&m.params, &binding).collect(),
                    task,
                    pre_pos,
                    pre_neg,
                    subtasks,
                    ordering: m.ordering.clone(),
                });
            }
        }

        for (_, task) in problem.network.tasks() {
            for (i, arg) in task.args.iter().enumerate() {
                if let Term::Obj(o) = arg {
                    if universe.type_of(o).is_none() {
                        return Err(GroundError::UnknownObject(format!(
                            "`{o}` (argument {i} of `{task}`)"
                        )));
                    }
                }
            }
        }

        let mut op_index = HashMap::new();
        let mut ops_by_name: BTreeMap<String, Vec<OpId>> = BTreeMap::new();
        for op in &operators {
            op_index.insert(op.task.clone(), op.id);
            ops_by_name
                .entry(op.task.name.clone())
                .or_default()
                .push(op.id);
        }
        let mut methods_by_task: HashMap<Task, Vec<MethodId>> = HashMap::new();
        let mut compound_instances: BTreeMap<String, BTreeSet<Task>> = BTreeMap::new();
        for m in &methods {
            methods_by_task
                .entry(m.task.clone())
                .or_default()
                .push(m.id);
            compound_instances
                .entry(m.task.name.clone())
                .or_default()
                .insert(m.task.clone());
        }

        let effect_deterministic = operators.iter().all(|op| {
            let norm = |o: &GroundOutcome| {
                let mut a = o.add.clone();
                let mut d = o.del.clone();
                a.sort();
                a.dedup();
                d.sort();
                d.dedup();
                (a, d)
            };
            let first = norm(&op.outcomes[0]);
            op.outcomes.iter().all(|o| norm(o) == first)
        });

        let atom_count = g.atoms.len();
        let init = State::from_atoms(atom_count, problem.init.iter().map(|a| g.atom_index[a]));

        Ok(GroundModel {
            domain_name: domain.name.clone(),
            universe: universe.clone(),
            atoms: g.atoms,
            atom_index: g.atom_index,
            operators,
            methods,
            op_index,
            ops_by_name,
            methods_by_task,
            compound_instances: compound_instances
                .into_iter()
                .map(|(k, v)| (k, v.into_iter().collect()))
                .collect(),
            primitive_names: domain.operators.iter().map(|o| o.name.clone()).collect(),
            compound_names: domain.compound_tasks.keys().cloned().collect(),
            init,
            initial_network: problem.network.clone(),
            effect_deterministic,
        })
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn atom(&self, id: AtomId) -> &Atom {
        &self.atoms[id.index()]
    }

    pub fn atom_id(&self, atom: &Atom) -> Option<AtomId> {
        self.atom_index.get(atom).copied()
    }

    pub fn operator(&self, id: OpId) -> &GroundOperator {
        &self.operators[id.index()]
    }

    pub fn method(&self, id: MethodId) -> &GroundMethod {
        &self.methods[id.index()]
    }

    pub fn operator_for(&self, task: &Task) -> Option<OpId> {
        self.op_index.get(task).copied()
    }

    pub fn methods_for(&self, task: &Task) -> &[MethodId] {
        self.methods_by_task
            .get(task)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn is_primitive(&self, name: &str) -> bool {
        self.primitive_names.contains(name)
    }

    pub fn is_compound(&self, name: &str) -> bool {
        self.compound_names.contains(name)
    }

    pub fn primitive_names(&self) -> impl Iterator<Item = &str> {
        self.primitive_names.iter().map(String::as_str)
    }

    pub fn compound_names(&self) -> impl Iterator<Item = &str> {
        self.compound_names.iter().map(String::as_str)
    }

    /// Every operator's outcomes share the same add and delete sets.
    pub fn is_effect_deterministic(&self) -> bool {
        self.effect_deterministic
    }

    /// Ground compound tasks (those heading at least one ground method) with this name.
    pub fn compound_instances(&self, name: &str) -> &[Task] {
        self.compound_instances
            .get(name)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Ground operators compatible with a possibly lifted primitive task.
    pub fn compatible_operators(&self, task: &Task, binding: &Binding) -> Vec<(OpId, Binding)> {
        if task.is_ground() {
            return self
                .operator_for(task)
                .map(|id| (id, binding.clone()))
                .into_iter()
                .collect();
        }
        self.ops_by_name
            .get(&task.name)
            .into_iter()
            .flatten()
            .filter_map(|id| unify(task, &self.operator(*id).task, binding).map(|b| (*id, b)))
            .collect()
    }

    /// Ground methods whose head unifies with a possibly lifted compound task.
    pub fn compatible_methods(&self, task: &Task, binding: &Binding) -> Vec<(MethodId, Binding)> {
        if task.is_ground() {
            return self
                .methods_for(task)
                .iter()
                .map(|m| (*m, binding.clone()))
                .collect();
        }
        let mut out = Vec::new();
        for inst in self.compound_instances(&task.name) {
            if let Some(b) = unify(task, inst, binding) {
                for m in self.methods_for(inst) {
                    out.push((*m, b.clone()));
                }
            }
        }
        out
    }

    pub fn lookup_operator(&self, name: &str, args: &[&str]) -> Option<OpId> {
        self.operator_for(&Task::ground(name, args))
    }

    pub fn plan_distributions(&self, plan: &Plan) -> Vec<&CostDistribution> {
        plan.steps
            .iter()
            .map(|s| &self.operator(*s).costs)
            .collect()
    }

    pub fn plan_operators(&self, plan: &Plan) -> Vec<&GroundOperator> {
        plan.steps.iter().map(|s| self.operator(*s)).collect()
    }

    /// True when every step is applicable under every outcome branch of the
    /// steps before it, starting from `start`.
    pub fn is_executable_from(&self, plan: &Plan, start: &State) -> bool {
        let mut frontier: BTreeSet<State> = BTreeSet::from([start.clone()]);
        for step in &plan.steps {
            let op = self.operator(*step);
            let mut next = BTreeSet::new();
            for s in &frontier {
                if !applicable(op, s) {
                    return false;
                }
                for i in 0..op.outcomes.len() {
                    next.insert(progress(s, op, i).expect("applicability checked"));
                }
            }
            frontier = next;
        }
        true
    }

    pub fn is_executable(&self, plan: &Plan) -> bool {
        self.is_executable_from(plan, &self.init)
    }

    /// The plan's operators rendered as `name(args)`.
    pub fn plan_to_strings(&self, plan: &Plan) -> Vec<String> {
        plan.steps
            .iter()
            .map(|s| self.operator(*s).task.to_string())
            .collect()
    }

    pub fn state_atoms(&self, state: &State) -> Vec<&Atom> {
        state.iter().map(|a| self.atom(a)).collect()
    }
}

struct Grounder<'a> {
    domain: &'a Domain,
    universe: &'a Universe,
    atoms: Vec<Atom>,
    atom_index: HashMap<Atom, AtomId>,
}

impl Grounder<'_> {
    fn intern(&mut self, atom: Atom) -> AtomId {
        if let Some(id) = self.atom_index.get(&atom) {
            return *id;
        }
        let id = AtomId(self.atoms.len() as u32);
        self.atoms.push(atom.clone());
        self.atom_index.insert(atom, id);
        id
    }

    fn resolve(
        &self,
        term: &Term,
        expected: &str,
        binding: &Binding,
    ) -> Result<String, GroundError> {
        match term {
            Term::Var(v) => binding
                .get(v)
                .cloned()
                .ok_or_else(|| GroundError::Invalid(format!("unbound variable `{v}`"))),
            Term::Obj(o) => match self.universe.type_of(o) {
                None => Err(GroundError::UnknownObject(format!("`{o}`"))),
                Some(ty) => {
                    let types = &self.universe.types;
                    if types.is_subtype(ty, expected) {
                        Ok(o.clone())
                    } else {
                        Err(GroundError::TypeMismatch(format!(
                            "object `{o}` of type `{ty}` used where `{expected}` is expected"
                        )))
                    }
                }
            },
        }
    }

    fn literal(&mut self, lit: &Literal, binding: &Binding) -> Result<(Atom, bool), GroundError> {
        let Some(sig) = self.domain.predicates.get(&lit.predicate) else {
            return Err(GroundError::UndeclaredPredicate(lit.predicate.clone()));
        };
        let args = lit
            .args
            .iter()
            .zip(sig)
            .map(|(t, ty)| self.resolve(t, ty, binding))
            .collect::<Result<Vec<_>, _>>()?;
        let atom = Atom {
            predicate: lit.predicate.clone(),
            args,
        };
        self.intern(atom.clone());
        Ok((atom, lit.negated))
    }

    fn literals(
        &mut self,
        lits: &[Literal],
        binding: &Binding,
    ) -> Result<Vec<(Atom, bool)>, GroundError> {
        lits.iter().map(|l| self.literal(l, binding)).collect()
    }

    fn split(&mut self, lits: Vec<(Atom, bool)>) -> (Vec<AtomId>, Vec<AtomId>) {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for (atom, negated) in lits {
            let id = self.intern(atom);
            if negated {
                neg.push(id);
            } else {
                pos.push(id);
            }
        }
        (pos, neg)
    }

    fn outcome(&mut self, out: &Outcome, binding: &Binding) -> Result<GroundOutcome, GroundError> {
        let mut ids = |lits: &[Literal]| -> Result<Vec<AtomId>, GroundError> {
            lits.iter()
                .map(|l| {
                    let (atom, _) = self.literal(l, binding)?;
                    Ok(self.intern(atom))
                })
                .collect()
        };
        Ok(GroundOutcome {
            probability: out.probability,
            add: ids(&out.add)?,
            del: ids(&out.del)?,
            cost: out.cost,
        })
    }

    fn task(&mut self, task: &Task, binding: &Binding) -> Result<Task, GroundError> {
        let sig = self
            .domain
            .task_signature(&task.name)
            .ok_or_else(|| GroundError::Invalid(format!("unknown task `{}`", task.name)))?;
        let args = task
            .args
            .iter()
            .zip(&sig)
            .map(|(t, ty)| self.resolve(t, ty, binding).map(Term::Obj))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Task::new(task.name.clone(), args))
    }
}

fn params_values<'a>(
    params: &'a [Param],
    binding: &'a Binding,
) -> impl Iterator<Item = String> + 'a {
    params.iter().map(move |p| binding[&p.name].clone())
}

/// All typed assignments of objects to parameters, in lexicographic order.
pub(crate) fn assignments(universe: &Universe, params: &[Param]) -> Vec<Binding> {
    let domains: Vec<Vec<&str>> = params.iter().map(|p| universe.objects_of(&p.ty)).collect();
    if domains.iter().any(Vec::is_empty) {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; params.len()];
    loop {
        out.push(
            params
                .iter()
                .zip(&idx)
                .zip(&domains)
                .map(|((p, i), d)| (p.name.clone(), d[*i].to_string()))
                .collect(),
        );
        let mut k = params.len();
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < domains[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}
