mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::{load, marine, marine_return};
use riskhtn_core::evaluation::{exact_eu, oracle_enumerate, OracleError};
use riskhtn_core::random::{random_instance, RandomConfig};
use riskhtn_core::search::Bounds;
use riskhtn_core::utility::UtilitySpec;
use serde_json::{json, Value};

const ROOMY: Bounds = Bounds {
    max_depth: 6,
    max_nodes: 1_000_000,
};

fn final_steps(model: &riskhtn_core::GroundModel, bounds: Bounds) -> BTreeSet<String> {
    let r = oracle_enumerate(model, &UtilitySpec::Linear, bounds).unwrap();
    r.plans
        .iter()
        .filter_map(|p| model.plan_to_strings(&p.plan).last().cloned())
        .collect()
}

#[test]
fn marine_plans_cover_both_return_legs() {
    let last = final_steps(&marine(), ROOMY);
    assert!(last.contains("go_without_glider(d1)"));
    assert!(last.contains("go_with_glider(d1,g1)"));
    let last = final_steps(&marine_return(), ROOMY);
    assert_eq!(last.len(), 2);
}

#[test]
fn oracle_best_is_the_maximum() {
    let model = marine();
    for spec in [
        UtilitySpec::Linear,
        UtilitySpec::averse(0.2),
        UtilitySpec::seeking(0.2),
    ] {
        let r = oracle_enumerate(&model, &spec, ROOMY).unwrap();
        let best = r.best_plan().unwrap();
        for p in &r.plans {
            assert!(p.eu <= best.eu);
            assert_eq!(p.eu, exact_eu(&model, &p.plan, &spec).unwrap());
        }
    }
}

#[test]
fn forced_chain_has_one_plan() {
    let op = |n: &str, c: f64| {
        json!({"name": n, "params": [], "precond": [],
        "outcomes": [{"p": 0.5, "add": [], "del": [], "cost": c}, {"p": 0.5, "add": [], "del": [], "cost": 2.0 * c}]})
    };
    let domain = json!({
        "name": "chain", "types": {}, "predicates": [],
        "operators": [op("a", -1.0), op("b", -2.0)],
        "compound_tasks": [{"name": "top", "params": []}, {"name": "mid", "params": []}],
        "methods": [
            {"name": "m_top", "task": {"name": "top", "args": []}, "params": [], "precond": [],
             "subtasks": [{"id": "x", "name": "a", "args": []}, {"id": "y", "name": "mid", "args": []}],
             "ordering": [["x", "y"]]},
            {"name": "m_mid", "task": {"name": "mid", "args": []}, "params": [], "precond": [],
             "subtasks": [{"id": "z", "name": "b", "args": []}], "ordering": []}
        ]
    });
    let problem = json!({"objects": {}, "init": [],
        "tasks": {"subtasks": [{"id": "t", "name": "top", "args": []}], "ordering": []}});
    let model = load(&domain.to_string(), &problem.to_string());
    let r = oracle_enumerate(&model, &UtilitySpec::Linear, ROOMY).unwrap();
    assert_eq!(r.plans.len(), 1);
    assert_eq!(model.plan_to_strings(&r.plans[0].plan), ["a()", "b()"]);
    assert_eq!(r.plans[0].eu, -4.5);
}

#[test]
fn node_cap_is_reported() {
    let r = oracle_enumerate(
        &marine(),
        &UtilitySpec::Linear,
        Bounds {
            max_depth: 6,
            max_nodes: 3,
        },
    );
    assert!(matches!(r, Err(OracleError::NodeCap(3))));
}

fn total_order(n: usize) -> Vec<Value> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            out.push(json!([format!("s{i}"), format!("s{j}")]));
        }
    }
    out
}

/// Sequences of operator names derivable from `task` within `budget`
/// decompositions, each with the fewest decompositions that yields it.
fn yields(
    task: &str,
    budget: usize,
    methods: &BTreeMap<String, Vec<Vec<String>>>,
) -> BTreeMap<Vec<String>, usize> {
    let mut out = BTreeMap::new();
    let Some(ms) = methods.get(task) else {
        out.insert(vec![format!("{task}()")], 0);
        return out;
    };
    if budget == 0 {
        return out;
    }
    for subtasks in ms {
        let mut acc: BTreeMap<Vec<String>, usize> = BTreeMap::from([(Vec::new(), 1)]);
        for s in subtasks {
            let mut next = BTreeMap::new();
            for (prefix, used) in &acc {
                for (tail, more) in yields(s, budget - used, methods) {
                    let total = used + more;
                    if total > budget {
                        continue;
                    }
                    let mut seq = prefix.clone();
                    seq.extend(tail);
                    let e = next.entry(seq).or_insert(total);
                    *e = (*e).min(total);
                }
            }
            acc = next;
        }
        for (seq, used) in acc {
            let e = out.entry(seq).or_insert(used);
            *e = (*e).min(used);
        }
    }
    out
}

fn count_sequences(
    roots: &[String],
    budget: usize,
    methods: &BTreeMap<String, Vec<Vec<String>>>,
) -> usize {
    let mut acc: BTreeMap<Vec<String>, usize> = BTreeMap::from([(Vec::new(), 0)]);
    for r in roots {
        let mut next = BTreeMap::new();
        for (prefix, used) in &acc {
            for (tail, more) in yields(r, budget - used, methods) {
                let total = used + more;
                if total > budget {
                    continue;
                }
                let mut seq = prefix.clone();
                seq.extend(tail);
                let e = next.entry(seq).or_insert(total);
                *e = (*e).min(total);
            }
        }
        acc = next;
    }
    acc.len()
}

#[test]
fn unconstrained_totally_ordered_counts_match_tree_count() {
    let budget = 3;
    let mut compared = 0;
    for seed in 0..60 {
        let inst = random_instance(seed, &RandomConfig::default());
        let mut domain: Value = serde_json::from_str(&inst.domain_text).unwrap();
        let mut problem: Value = serde_json::from_str(&inst.problem_text).unwrap();
        for op in domain["operators"].as_array_mut().unwrap() {
            op["precond"] = json!([]);
        }
        let mut methods: BTreeMap<String, Vec<Vec<String>>> = BTreeMap::new();
        for m in domain["methods"].as_array_mut().unwrap() {
            m["precond"] = json!([]);
            let subs: Vec<String> = m["subtasks"]
                .as_array()
                .unwrap()
                .iter()
                .map(|s| s["name"].as_str().unwrap().to_string())
                .collect();
            m["ordering"] = json!(total_order(subs.len()));
            methods
                .entry(m["task"]["name"].as_str().unwrap().to_string())
                .or_default()
                .push(subs);
        }
        let roots: Vec<String> = problem["tasks"]["subtasks"]
            .as_array()
            .unwrap()
            .iter()
            .map(|s| s["name"].as_str().unwrap().to_string())
            .collect();
        problem["tasks"]["ordering"] = json!(total_order(roots.len()));
        let renamed: Vec<Value> = (0..roots.len())
            .map(|i| json!({"id": format!("s{i}"), "name": roots[i], "args": []}))
            .collect();
        problem["tasks"]["subtasks"] = json!(renamed);

        let model = load(&domain.to_string(), &problem.to_string());
        let bounds = Bounds {
            max_depth: budget,
            max_nodes: 2_000_000,
        };
        let r = oracle_enumerate(&model, &UtilitySpec::Linear, bounds).unwrap();
        assert_eq!(
            r.plans.len(),
            count_sequences(&roots, budget, &methods),
            "seed {seed}"
        );
        compared += r.plans.len();
    }
    assert!(compared > 60);
}
