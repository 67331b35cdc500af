//! Lifted domain: typed predicates, cost-variable operators, compound tasks and methods.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use super::types::{Literal, Param, Task, Term, TypeHierarchy};
use super::ValidationError;

/// Tolerance on the outcome probability sum.
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

/// One possible outcome of an operator: probability, effect and (negative) cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub probability: f64,
    pub add: Vec<Literal>,
    pub del: Vec<Literal>,
    pub cost: f64,
}

/// Operator schema whose execution cost follows a discrete distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    pub name: String,
    pub params: Vec<Param>,
    pub precondition: Vec<Literal>,
    pub outcomes: Vec<Outcome>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Subtask {
    pub id: String,
    pub task: Task,
}

/// Method schema `<ct(m), pre(m), tn(m)>`.
#[derive(Debug, Clone, PartialEq)]
pub struct Method {
    pub name: String,
    pub task: Task,
    pub params: Vec<Param>,
    pub precondition: Vec<Literal>,
    pub subtasks: Vec<Subtask>,
    pub ordering: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub name: String,
    pub types: TypeHierarchy,
    /// Predicate name to argument types.
    pub predicates: BTreeMap<String, Vec<String>>,
    pub operators: Vec<Operator>,
    /// Compound task name to argument types.
    pub compound_tasks: BTreeMap<String, Vec<String>>,
    pub methods: Vec<Method>,
}

impl Domain {
    /// Validates and normalizes a domain.
    ///
    /// Zero-probability outcomes are dropped and probability vectors whose sum
    /// is within [`PROBABILITY_TOLERANCE`] of one are rescaled to sum to one.
    pub fn new(
        name: String,
        types: TypeHierarchy,
        predicates: BTreeMap<String, Vec<String>>,
        mut operators: Vec<Operator>,
        compound_tasks: BTreeMap<String, Vec<String>>,
        methods: Vec<Method>,
    ) -> Result<Self, ValidationError> {
        for (pred, arg_types) in &predicates {
            for (i, ty) in arg_types.iter().enumerate() {
                if !types.contains(ty) {
                    return Err(ValidationError::new(
                        format!("predicates.{pred}.params[{i}]"),
                        format!("unknown type `{ty}`"),
                    ));
                }
            }
        }
        for (task, arg_types) in &compound_tasks {
            for (i, ty) in arg_types.iter().enumerate() {
                if !types.contains(ty) {
                    return Err(ValidationError::new(
                        format!("compound_tasks.{task}.params[{i}]"),
                        format!("unknown type `{ty}`"),
                    ));
                }
            }
        }

        let mut checker = Checker {
            types: &types,
            predicates: &predicates,
            compound_tasks: &compound_tasks,
            operator_params: BTreeMap::new(),
        };

        let mut op_names = HashSet::new();
        for (oi, op) in operators.iter_mut().enumerate() {
            let path = format!("operators[{oi}]");
            if !op_names.insert(op.name.clone()) {
                return Err(ValidationError::new(
                    format!("{path}.name"),
                    format!("duplicate operator `{}`", op.name),
                ));
            }
            if compound_tasks.contains_key(&op.name) {
                return Err(ValidationError::new(
                    format!("{path}.name"),
                    format!("`{}` is declared both primitive and compound", op.name),
                ));
            }
            let scope = checker.params(&path, &op.params)?;
            for (li, lit) in op.precondition.iter().enumerate() {
                checker.literal(&format!("{path}.precond[{li}]"), lit, &scope)?;
            }
            normalize_outcomes(&path, &mut op.outcomes)?;
            for (ki, out) in op.outcomes.iter().enumerate() {
                let opath = format!("{path}.outcomes[{ki}]");
                for (li, lit) in out.add.iter().enumerate() {
                    checker.effect(&format!("{opath}.add[{li}]"), lit, &scope)?;
                }
                for (li, lit) in out.del.iter().enumerate() {
                    checker.effect(&format!("{opath}.del[{li}]"), lit, &scope)?;
                }
                for lit in &out.add {
                    if out
                        .del
                        .iter()
                        .any(|d| d.predicate == lit.predicate && d.args == lit.args)
                    {
                        return Err(ValidationError::new(
                            opath.clone(),
                            format!("`{lit}` is both added and deleted"),
                        ));
                    }
                }
            }
            checker.operator_params.insert(
                op.name.clone(),
                op.params.iter().map(|p| p.ty.clone()).collect(),
            );
        }

        let mut method_names = HashSet::new();
        for (mi, m) in methods.iter().enumerate() {
            let path = format!("methods[{mi}]");
            if !method_names.insert(m.name.clone()) {
                return Err(ValidationError::new(
                    format!("{path}.name"),
                    format!("duplicate method `{}`", m.name),
                ));
            }
            let scope = checker.params(&path, &m.params)?;
            if !compound_tasks.contains_key(&m.task.name) {
                return Err(ValidationError::new(
                    format!("{path}.task.name"),
                    format!("`{}` is not a declared compound task", m.task.name),
                ));
            }
            checker.task(&format!("{path}.task"), &m.task, &scope)?;
            for (li, lit) in m.precondition.iter().enumerate() {
                checker.literal(&format!("{path}.precond[{li}]"), lit, &scope)?;
            }
            let mut ids = BTreeSet::new();
            for (si, st) in m.subtasks.iter().enumerate() {
                let spath = format!("{path}.subtasks[{si}]");
                check_task_id(&format!("{spath}.id"), &st.id)?;
                if !ids.insert(st.id.as_str()) {
                    return Err(ValidationError::new(
                        format!("{spath}.id"),
                        format!("duplicate subtask id `{}`", st.id),
                    ));
                }
                checker.task(&spath, &st.task, &scope)?;
            }
            check_ordering(&format!("{path}.ordering"), &ids, &m.ordering)?;
        }

        Ok(Domain {
            name,
            types,
            predicates,
            operators,
            compound_tasks,
            methods,
        })
    }

    pub fn operator(&self, name: &str) -> Option<&Operator> {
        self.operators.iter().find(|o| o.name == name)
    }

    pub fn is_primitive(&self, name: &str) -> bool {
        self.operator(name).is_some()
    }

    pub fn is_compound(&self, name: &str) -> bool {
        self.compound_tasks.contains_key(name)
    }

    /// Declared argument types of a primitive or compound task.
    pub fn task_signature(&self, name: &str) -> Option<Vec<String>> {
        if let Some(op) = self.operator(name) {
            return Some(op.params.iter().map(|p| p.ty.clone()).collect());
        }
        self.compound_tasks.get(name).cloned()
    }
}

/// Task ids may not contain `.`, which separates generations of decomposed ids.
pub(crate) fn check_task_id(path: &str, id: &str) -> Result<(), ValidationError> {
    if id.is_empty() || id.contains('.') {
        return Err(ValidationError::new(
            path,
            format!("task id `{id}` must be non-empty and must not contain `.`"),
        ));
    }
    Ok(())
}

pub(crate) fn check_ordering(
    path: &str,
    ids: &BTreeSet<&str>,
    ordering: &[(String, String)],
) -> Result<(), ValidationError> {
    for (i, (a, b)) in ordering.iter().enumerate() {
        for id in [a, b] {
            if !ids.contains(id.as_str()) {
                return Err(ValidationError::new(
                    format!("{path}[{i}]"),
                    format!("unknown task id `{id}`"),
                ));
            }
        }
    }
    // Kahn's algorithm; leftover vertices mean a cycle.
    let mut indegree: BTreeMap<&str, usize> = ids.iter().map(|id| (*id, 0)).collect();
    let edges: BTreeSet<(&str, &str)> = ordering
        .iter()
        .map(|(a, b)| (a.as_str(), b.as_str()))
        .collect();
    for (_, b) in &edges {
        *indegree.get_mut(b).unwrap() += 1;
    }
    let mut ready: Vec<&str> = indegree
        .iter()
        .filter(|(_, d)| **d == 0)
        .map(|(id, _)| *id)
        .collect();
    let mut seen = 0;
    while let Some(id) = ready.pop() {
        seen += 1;
        for (_, b) in edges.iter().filter(|(a, _)| *a == id) {
            let d = indegree.get_mut(b).unwrap();
            *d -= 1;
            if *d == 0 {
                ready.push(b);
            }
        }
    }
    if seen != ids.len() {
        return Err(ValidationError::new(
            path,
            "ordering constraints contain a cycle",
        ));
    }
    Ok(())
}

fn normalize_outcomes(path: &str, outcomes: &mut Vec<Outcome>) -> Result<(), ValidationError> {
    for (i, out) in outcomes.iter().enumerate() {
        if !(out.probability >= 0.0 && out.probability <= 1.0) {
            return Err(ValidationError::new(
                format!("{path}.outcomes[{i}].p"),
                format!("probability {} outside [0, 1]", out.probability),
            ));
        }
        if !out.cost.is_finite() || out.cost >= 0.0 {
            return Err(ValidationError::new(
                format!("{path}.outcomes[{i}].cost"),
                format!("cost must be strictly negative (got {})", out.cost),
            ));
        }
    }
    outcomes.retain(|o| o.probability > 0.0);
    if outcomes.is_empty() {
        return Err(ValidationError::new(
            format!("{path}.outcomes"),
            "operator needs at least one outcome with positive probability",
        ));
    }
    let sum: f64 = outcomes.iter().map(|o| o.probability).sum();
    if (sum - 1.0).abs() > PROBABILITY_TOLERANCE {
        return Err(ValidationError::new(
            format!("{path}.outcomes"),
            format!("outcome probabilities sum to {sum}, expected 1"),
        ));
    }
    if sum != 1.0 {
        for o in outcomes.iter_mut() {
            o.probability /= sum;
        }
    }
    Ok(())
}

struct Checker<'a> {
    types: &'a TypeHierarchy,
    predicates: &'a BTreeMap<String, Vec<String>>,
    compound_tasks: &'a BTreeMap<String, Vec<String>>,
    operator_params: BTreeMap<String, Vec<String>>,
}

type Scope = BTreeMap<String, String>;

impl Checker<'_> {
    fn params(&self, path: &str, params: &[Param]) -> Result<Scope, ValidationError> {
        let mut scope = Scope::new();
        for (i, p) in params.iter().enumerate() {
            if !p.name.starts_with('?') || p.name.len() < 2 {
                return Err(ValidationError::new(
                    format!("{path}.params[{i}].name"),
                    format!("parameter `{}` must start with `?`", p.name),
                ));
            }
            if !self.types.contains(&p.ty) {
                return Err(ValidationError::new(
                    format!("{path}.params[{i}].type"),
                    format!("unknown type `{}`", p.ty),
                ));
            }
            if scope.insert(p.name.clone(), p.ty.clone()).is_some() {
                return Err(ValidationError::new(
                    format!("{path}.params[{i}].name"),
                    format!("duplicate parameter `{}`", p.name),
                ));
            }
        }
        Ok(scope)
    }

    fn args(
        &self,
        path: &str,
        what: &str,
        args: &[Term],
        expected: &[String],
        scope: &Scope,
    ) -> Result<(), ValidationError> {
        if args.len() != expected.len() {
            return Err(ValidationError::new(
                path,
                format!(
                    "arity mismatch for `{what}`: expected {}, got {}",
                    expected.len(),
                    args.len()
                ),
            ));
        }
        for (i, (arg, ty)) in args.iter().zip(expected).enumerate() {
            if let Term::Var(v) = arg {
                match scope.get(v) {
                    None => {
                        return Err(ValidationError::new(
                            format!("{path}.args[{i}]"),
                            format!("variable `{v}` is not a parameter"),
                        ))
                    }
                    Some(vty) => {
                        if !self.types.is_subtype(vty, ty) && !self.types.is_subtype(ty, vty) {
                            return Err(ValidationError::new(
                                format!("{path}.args[{i}]"),
                                format!("type mismatch: `{v}` is `{vty}`, `{what}` expects `{ty}`"),
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn literal(&self, path: &str, lit: &Literal, scope: &Scope) -> Result<(), ValidationError> {
        let Some(sig) = self.predicates.get(&lit.predicate) else {
            return Err(ValidationError::new(
                path,
                format!("undeclared predicate `{}`", lit.predicate),
            ));
        };
        self.args(path, &lit.predicate, &lit.args, sig, scope)
    }

    fn effect(&self, path: &str, lit: &Literal, scope: &Scope) -> Result<(), ValidationError> {
        if lit.negated {
            return Err(ValidationError::new(path, "effects must be positive atoms"));
        }
        self.literal(path, lit, scope)
    }

    fn task(&self, path: &str, task: &Task, scope: &Scope) -> Result<(), ValidationError> {
        let sig = self
            .operator_params
            .get(&task.name)
            .or_else(|| self.compound_tasks.get(&task.name));
        let Some(sig) = sig else {
            return Err(ValidationError::new(
                format!("{path}.name"),
                format!("unknown task `{}`", task.name),
            ));
        };
        self.args(path, &task.name, &task.args, sig, scope)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(p: &str, args: &[&str]) -> Literal {
        Literal::positive(p, args.iter().map(|a| Term::parse(a)).collect())
    }

    fn base() -> (TypeHierarchy, BTreeMap<String, Vec<String>>) {
        let mut t = BTreeMap::new();
        t.insert("diver".to_string(), "object".to_string());
        let mut preds = BTreeMap::new();
        preds.insert("ready".to_string(), vec!["diver".to_string()]);
        (TypeHierarchy::new(t).unwrap(), preds)
    }

    fn op(outcomes: Vec<(f64, f64)>) -> Operator {
        Operator {
            name: "dive".into(),
            params: vec![Param::new("?d", "diver")],
            precondition: vec![lit("ready", &["?d"])],
            outcomes: outcomes
                .into_iter()
                .map(|(p, c)| Outcome {
                    probability: p,
                    add: vec![],
                    del: vec![lit("ready", &["?d"])],
                    cost: c,
                })
                .collect(),
        }
    }

    fn domain(ops: Vec<Operator>) -> Result<Domain, ValidationError> {
        let (t, p) = base();
        Domain::new("d".into(), t, p, ops, BTreeMap::new(), vec![])
    }

    #[test]
    fn positive_cost_is_rejected() {
        let err = domain(vec![op(vec![(1.0, 2.0)])]).unwrap_err();
        assert!(
            err.message.contains("cost must be strictly negative"),
            "{err}"
        );
        assert_eq!(err.path, "operators[0].outcomes[0].cost");
    }

    #[test]
    fn probabilities_within_tolerance_are_renormalized() {
        let d = domain(vec![op(vec![(0.5, -1.0), (0.5 + 5e-10, -2.0)])]).unwrap();
        let sum: f64 = d.operators[0].outcomes.iter().map(|o| o.probability).sum();
        assert!((sum - 1.0).abs() < 1e-15);
    }

    #[test]
    fn probabilities_outside_tolerance_are_rejected() {
        assert!(domain(vec![op(vec![(0.5, -1.0), (0.6, -2.0)])]).is_err());
    }

    #[test]
    fn zero_probability_outcomes_are_dropped() {
        let d = domain(vec![op(vec![(1.0, -1.0), (0.0, -2.0)])]).unwrap();
        assert_eq!(d.operators[0].outcomes.len(), 1);
    }

    #[test]
    fn undeclared_predicate_is_rejected() {
        let mut o = op(vec![(1.0, -1.0)]);
        o.precondition.push(lit("wet", &["?d"]));
        let err = domain(vec![o]).unwrap_err();
        assert!(err.message.contains("undeclared predicate"));
    }

    #[test]
    fn arity_mismatch_is_rejected() {
        let mut o = op(vec![(1.0, -1.0)]);
        o.precondition = vec![lit("ready", &["?d", "?d"])];
        assert!(domain(vec![o]).unwrap_err().message.contains("arity"));
    }

    #[test]
    fn add_and_delete_of_same_atom_is_rejected() {
        let mut o = op(vec![(1.0, -1.0)]);
        o.outcomes[0].add = vec![lit("ready", &["?d"])];
        assert!(domain(vec![o]).is_err());
    }

    #[test]
    fn cyclic_method_ordering_is_rejected() {
        let (t, p) = base();
        let mut ct = BTreeMap::new();
        ct.insert("work".to_string(), vec!["diver".to_string()]);
        let m = Method {
            name: "m".into(),
            task: Task::new("work", vec![Term::parse("?d")]),
            params: vec![Param::new("?d", "diver")],
            precondition: vec![],
            subtasks: vec![
                Subtask {
                    id: "a".into(),
                    task: Task::new("dive", vec![Term::parse("?d")]),
                },
                Subtask {
                    id: "b".into(),
                    task: Task::new("dive", vec![Term::parse("?d")]),
                },
            ],
            ordering: vec![("a".into(), "b".into()), ("b".into(), "a".into())],
        };
        let err =
            Domain::new("d".into(), t, p, vec![op(vec![(1.0, -1.0)])], ct, vec![m]).unwrap_err();
        assert!(err.message.contains("cycle"));
    }
}
