//! JSON documents for domains, problems and utility specifications.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ParseError;
use crate::model::{
    Atom, Domain, Literal, Method, Operator, Outcome, Param, Problem, Subtask, Task, TaskNetwork,
    Term, TypeHierarchy,
};
use crate::utility::{UtilityError, UtilitySpec};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DomainDoc {
    name: String,
    #[serde(default)]
    types: BTreeMap<String, String>,
    #[serde(default)]
    predicates: Vec<SignatureDoc>,
    #[serde(default)]
    operators: Vec<OperatorDoc>,
    #[serde(default)]
    compound_tasks: Vec<SignatureDoc>,
    #[serde(default)]
    methods: Vec<MethodDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SignatureDoc {
    name: String,
    #[serde(default)]
    params: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamDoc {
    name: String,
    #[serde(rename = "type")]
    ty: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LiteralDoc {
    pred: String,
    #[serde(default)]
    args: Vec<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    neg: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutcomeDoc {
    p: f64,
    #[serde(default)]
    add: Vec<LiteralDoc>,
    #[serde(default)]
    del: Vec<LiteralDoc>,
    cost: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OperatorDoc {
    name: String,
    #[serde(default)]
    params: Vec<ParamDoc>,
    #[serde(default)]
    precond: Vec<LiteralDoc>,
    outcomes: Vec<OutcomeDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskDoc {
    name: String,
    #[serde(default)]
    args: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SubtaskDoc {
    id: String,
    name: String,
    #[serde(default)]
    args: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MethodDoc {
    name: String,
    task: TaskDoc,
    #[serde(default)]
    params: Vec<ParamDoc>,
    #[serde(default)]
    precond: Vec<LiteralDoc>,
    #[serde(default)]
    subtasks: Vec<SubtaskDoc>,
    #[serde(default)]
    ordering: Vec<(String, String)>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemDoc {
    #[serde(default)]
    objects: BTreeMap<String, String>,
    #[serde(default)]
    init: Vec<LiteralDoc>,
    tasks: NetworkDoc,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDoc {
    #[serde(default)]
    subtasks: Vec<SubtaskDoc>,
    #[serde(default)]
    ordering: Vec<(String, String)>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct UtilityDoc {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    initial_resource: Option<f64>,
}

fn syntax(doc: &'static str, e: serde_json::Error) -> ParseError {
    ParseError::Syntax {
        document: doc,
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

fn invalid(doc: &'static str, path: impl Into<String>, message: impl Into<String>) -> ParseError {
    ParseError::Invalid {
        document: doc,
        path: path.into(),
        message: message.into(),
    }
}

fn terms(args: &[String]) -> Vec<Term> {
    args.iter().map(|a| Term::parse(a)).collect()
}

fn literal(doc: LiteralDoc) -> Literal {
    Literal {
        predicate: doc.pred,
        args: terms(&doc.args),
        negated: doc.neg,
    }
}

fn params(docs: Vec<ParamDoc>) -> Vec<Param> {
    docs.into_iter().map(|p| Param::new(p.name, p.ty)).collect()
}

fn signatures(
    doc: &'static str,
    key: &str,
    sigs: Vec<SignatureDoc>,
) -> Result<BTreeMap<String, Vec<String>>, ParseError> {
    let mut out = BTreeMap::new();
    for (i, s) in sigs.into_iter().enumerate() {
        if out.contains_key(&s.name) {
            return Err(invalid(
                doc,
                format!("{key}[{i}].name"),
                format!("duplicate name `{}`", s.name),
            ));
        }
        out.insert(s.name, s.params);
    }
    Ok(out)
}

pub fn parse_domain(text: &str) -> Result<Domain, ParseError> {
    const DOC: &str = "domain";
    let doc: DomainDoc = serde_json::from_str(text).map_err(|e| syntax(DOC, e))?;
    let types = TypeHierarchy::new(doc.types).map_err(|e| invalid(DOC, "types", e.to_string()))?;
    let predicates = signatures(DOC, "predicates", doc.predicates)?;
    let compound_tasks = signatures(DOC, "compound_tasks", doc.compound_tasks)?;
    let operators = doc
        .operators
        .into_iter()
        .map(|o| Operator {
            name: o.name,
            params: params(o.params),
            precondition: o.precond.into_iter().map(literal).collect(),
            outcomes: o
                .outcomes
                .into_iter()
                .map(|out| Outcome {
                    probability: out.p,
                    add: out.add.into_iter().map(literal).collect(),
                    del: out.del.into_iter().map(literal).collect(),
                    cost: out.cost,
                })
                .collect(),
        })
        .collect();
    let methods = doc
        .methods
        .into_iter()
        .map(|m| Method {
            name: m.name,
            task: Task::new(m.task.name, terms(&m.task.args)),
            params: params(m.params),
            precondition: m.precond.into_iter().map(literal).collect(),
            subtasks: m
                .subtasks
                .into_iter()
                .map(|s| Subtask {
                    id: s.id,
                    task: Task::new(s.name, terms(&s.args)),
                })
                .collect(),
            ordering: m.ordering,
        })
        .collect();
    Domain::new(
        doc.name,
        types,
        predicates,
        operators,
        compound_tasks,
        methods,
    )
    .map_err(|e| invalid(DOC, e.path, e.message))
}

pub fn parse_problem(text: &str, domain: &Domain) -> Result<Problem, ParseError> {
    const DOC: &str = "problem";
    let doc: ProblemDoc = serde_json::from_str(text).map_err(|e| syntax(DOC, e))?;
    let mut init = BTreeSet::new();
    for (i, lit) in doc.init.into_iter().enumerate() {
        let path = format!("init[{i}]");
        if lit.neg {
            return Err(invalid(DOC, path, "initial state atoms cannot be negated"));
        }
        if let Some(v) = lit.args.iter().find(|a| a.starts_with('?')) {
            return Err(invalid(
                DOC,
                path,
                format!("initial state atom has variable `{v}`"),
            ));
        }
        init.insert(Atom {
            predicate: lit.pred,
            args: lit.args,
        });
    }
    for (i, s) in doc.tasks.subtasks.iter().enumerate() {
        if domain.task_signature(&s.name).is_none() {
            return Err(invalid(
                DOC,
                format!("tasks.subtasks[{i}].name"),
                format!("unknown task `{}`", s.name),
            ));
        }
    }
    let nodes = doc
        .tasks
        .subtasks
        .into_iter()
        .map(|s| (s.id, Task::new(s.name, terms(&s.args))));
    let network = TaskNetwork::new(nodes, doc.tasks.ordering)
        .map_err(|e| invalid(DOC, "tasks", e.to_string()))?;
    Problem::new(domain, doc.objects, init, network).map_err(|e| invalid(DOC, e.path, e.message))
}

pub fn parse_utility(text: &str) -> Result<UtilitySpec, ParseError> {
    const DOC: &str = "utility";
    let doc: UtilityDoc = serde_json::from_str(text).map_err(|e| syntax(DOC, e))?;
    let need = |v: Option<f64>, key: &str| v.ok_or_else(|| invalid(DOC, key, "missing field"));
    let param = |e: UtilityError, key: &str| invalid(DOC, key, e.to_string());
    let spec = match doc.kind.as_str() {
        "linear" => UtilitySpec::Linear,
        "exponential" => {
            let a = need(doc.a, "a")?;
            let alpha = need(doc.alpha, "alpha")?;
            let key = if a == 1.0 || a == -1.0 { "alpha" } else { "a" };
            UtilitySpec::exponential(a, alpha).map_err(|e| param(e, key))?
        }
        "one_switch" => {
            let d = need(doc.d, "D")?;
            let alpha = need(doc.alpha, "alpha")?;
            let r = need(doc.initial_resource, "initial_resource")?;
            let key = if d.is_nan() || d <= 0.0 {
                "D"
            } else if alpha.is_nan() || alpha <= 0.0 {
                "alpha"
            } else {
                "initial_resource"
            };
            UtilitySpec::one_switch(d, alpha, r).map_err(|e| param(e, key))?
        }
        other => {
            return Err(invalid(
                DOC,
                "kind",
                format!(
                    "unknown utility kind `{other}` (expected linear, exponential or one_switch)"
                ),
            ))
        }
    };
    Ok(spec)
}

fn args_of(terms: &[Term]) -> Vec<String> {
    terms.iter().map(|t| t.as_str().to_string()).collect()
}

fn literal_doc(l: &Literal) -> LiteralDoc {
    LiteralDoc {
        pred: l.predicate.clone(),
        args: args_of(&l.args),
        neg: l.negated,
    }
}

fn param_docs(ps: &[Param]) -> Vec<ParamDoc> {
    ps.iter()
        .map(|p| ParamDoc {
            name: p.name.clone(),
            ty: p.ty.clone(),
        })
        .collect()
}

fn signature_docs(m: &BTreeMap<String, Vec<String>>) -> Vec<SignatureDoc> {
    m.iter()
        .map(|(name, params)| SignatureDoc {
            name: name.clone(),
            params: params.clone(),
        })
        .collect()
}

fn to_string(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents always serialize");
    s.push('\n');
    s
}

pub fn serialize_domain(domain: &Domain) -> String {
    let doc = DomainDoc {
        name: domain.name.clone(),
        types: domain.types.parents().clone(),
        predicates: signature_docs(&domain.predicates),
        operators: domain
            .operators
            .iter()
            .map(|o| OperatorDoc {
                name: o.name.clone(),
                params: param_docs(&o.params),
                precond: o.precondition.iter().map(literal_doc).collect(),
                outcomes: o
                    .outcomes
                    .iter()
                    .map(|out| OutcomeDoc {
                        p: out.probability,
                        add: out.add.iter().map(literal_doc).collect(),
                        del: out.del.iter().map(literal_doc).collect(),
                        cost: out.cost,
                    })
                    .collect(),
            })
            .collect(),
        compound_tasks: signature_docs(&domain.compound_tasks),
        methods: domain
            .methods
            .iter()
            .map(|m| MethodDoc {
                name: m.name.clone(),
                task: TaskDoc {
                    name: m.task.name.clone(),
                    args: args_of(&m.task.args),
                },
                params: param_docs(&m.params),
                precond: m.precondition.iter().map(literal_doc).collect(),
                subtasks: m
                    .subtasks
                    .iter()
                    .map(|s| SubtaskDoc {
                        id: s.id.clone(),
                        name: s.task.name.clone(),
                        args: args_of(&s.task.args),
                    })
                    .collect(),
                ordering: m.ordering.clone(),
            })
            .collect(),
    };
    to_string(&doc)
}

pub fn serialize_problem(problem: &Problem) -> String {
    let doc = ProblemDoc {
        objects: problem.universe.objects().clone(),
        init: problem
            .init
            .iter()
            .map(|a| LiteralDoc {
                pred: a.predicate.clone(),
                args: a.args.clone(),
                neg: false,
            })
            .collect(),
        tasks: NetworkDoc {
            subtasks: problem
                .network
                .tasks()
                .map(|(id, t)| SubtaskDoc {
                    id: id.to_string(),
                    name: t.name.clone(),
                    args: args_of(&t.args),
                })
                .collect(),
            ordering: problem.network.order().iter().cloned().collect(),
        },
    };
    to_string(&doc)
}

pub fn serialize_utility(spec: &UtilitySpec) -> String {
    let doc = match *spec {
        UtilitySpec::Linear => UtilityDoc {
            kind: "linear".into(),
            a: None,
            alpha: None,
            d: None,
            initial_resource: None,
        },
        UtilitySpec::Exponential { attitude, alpha } => UtilityDoc {
            kind: "exponential".into(),
            a: Some(attitude.coefficient()),
            alpha: Some(alpha),
            d: None,
            initial_resource: None,
        },
        UtilitySpec::OneSwitch {
            d,
            alpha,
            initial_resource,
        } => UtilityDoc {
            kind: "one_switch".into(),
            a: None,
            alpha: Some(alpha),
            d: Some(d),
            initial_resource: Some(initial_resource),
        },
    };
    to_string(&doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "name": "mini",
        "types": {"diver": "object"},
        "predicates": [{"name": "ready", "params": ["diver"]}],
        "operators": [{
            "name": "dive",
            "params": [{"name": "?d", "type": "diver"}],
            "precond": [{"pred": "ready", "args": ["?d"]}],
            "outcomes": [{"p": 1.0, "del": [{"pred": "ready", "args": ["?d"]}], "cost": -5}]
        }]
    }"#;

    #[test]
    fn minimal_domain() {
        let d = parse_domain(MINIMAL).unwrap();
        assert_eq!(d.operators.len(), 1);
        assert!(d.methods.is_empty());
        assert_eq!(parse_domain(&serialize_domain(&d)).unwrap(), d);
    }

    #[test]
    fn positive_cost_reports_path() {
        let text = MINIMAL.replace("\"cost\": -5", "\"cost\": 2.0");
        let err = parse_domain(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("cost must be strictly negative"), "{msg}");
        assert!(msg.contains("operators[0].outcomes[0].cost"), "{msg}");
    }

    #[test]
    fn syntax_error_reports_line() {
        let err = parse_domain("{\n  \"name\": \"x\",\n  oops\n}").unwrap_err();
        match err {
            ParseError::Syntax { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn unknown_type_is_reported() {
        let text = MINIMAL.replace("\"params\": [\"diver\"]", "\"params\": [\"boat\"]");
        let msg = parse_domain(&text).unwrap_err().to_string();
        assert!(msg.contains("unknown type `boat`"), "{msg}");
    }

    #[test]
    fn problems() {
        let d = parse_domain(MINIMAL).unwrap();
        let p = parse_problem(
            r#"{"objects": {"d1": "diver"}, "init": [{"pred": "ready", "args": ["d1"]}],
                "tasks": {"subtasks": [{"id": "t", "name": "dive", "args": ["d1"]}]}}"#,
            &d,
        )
        .unwrap();
        assert_eq!(p.network.len(), 1);
        assert_eq!(parse_problem(&serialize_problem(&p), &d).unwrap(), p);

        let empty = parse_problem(r#"{"tasks": {}}"#, &d).unwrap();
        assert!(empty.network.is_empty());

        let err = parse_problem(
            r#"{"objects": {"d1": "diver"}, "tasks": {"subtasks": [{"id": "t", "name": "dvie", "args": ["d1"]}]}}"#,
            &d,
        )
        .unwrap_err();
        assert!(err.to_string().contains("unknown task `dvie`"), "{err}");

        let err = parse_problem(r#"{"objects": {"d1": "boat"}, "tasks": {}}"#, &d).unwrap_err();
        assert!(
            err.to_string().contains("unknown object type `boat`"),
            "{err}"
        );
    }

    #[test]
    fn utilities() {
        assert_eq!(
            parse_utility(r#"{"kind":"linear"}"#).unwrap(),
            UtilitySpec::Linear
        );
        assert_eq!(
            parse_utility(r#"{"kind":"exponential","a":-1,"alpha":0.2}"#).unwrap(),
            UtilitySpec::averse(0.2)
        );
        let err = parse_utility(r#"{"kind":"exponential","a":-1,"alpha":0}"#).unwrap_err();
        assert!(err.to_string().contains("alpha"), "{err}");
        assert!(
            parse_utility(r#"{"kind":"one_switch","D":0,"alpha":0.1,"initial_resource":1}"#)
                .is_err()
        );
        assert!(parse_utility(r#"{"kind":"cubic"}"#).is_err());
        for spec in [
            UtilitySpec::Linear,
            UtilitySpec::seeking(0.3),
            UtilitySpec::one_switch(5.0, 0.04, 100.0).unwrap(),
        ] {
            assert_eq!(parse_utility(&serialize_utility(&spec)).unwrap(), spec);
        }
    }
}
