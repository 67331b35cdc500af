//! Seeded generator of small effect-deterministic planning instances.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::io::{parse_domain, parse_problem};
use crate::model::{Domain, Problem};
use crate::utility::CostDistribution;

#[derive(Debug, Clone, PartialEq)]
pub struct RandomConfig {
    pub max_operators: usize,
    pub max_compound_tasks: usize,
    pub max_methods: usize,
    pub max_outcomes: usize,
    pub max_subtasks: usize,
    pub facts: usize,
    /// Probability that a method's subtask is a compound task.
    pub compound_bias: f64,
    /// Probability that a compound subtask may refer back to its own or an
    /// earlier compound task.
    pub recursion: f64,
}

impl Default for RandomConfig {
    fn default() -> Self {
        RandomConfig {
            max_operators: 6,
            max_compound_tasks: 3,
            max_methods: 2,
            max_outcomes: 3,
            max_subtasks: 3,
            facts: 3,
            compound_bias: 0.35,
            recursion: 0.15,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RandomInstance {
    pub seed: u64,
    pub domain_text: String,
    pub problem_text: String,
    pub domain: Domain,
    pub problem: Problem,
}

/// Outcome probabilities proportional to small integers; costs are
/// negative multiples of 0.25 in `[-10, -0.25]`.
pub fn random_distribution<R: Rng>(rng: &mut R, max_outcomes: usize) -> CostDistribution {
    let n = rng.gen_range(1..=max_outcomes.max(1));
    let weights: Vec<u32> = (0..n).map(|_| rng.gen_range(1..=9)).collect();
    let total: u32 = weights.iter().sum();
    let outcomes = weights
        .iter()
        .map(|w| {
            let cost = -(rng.gen_range(1..=40) as f64) / 4.0;
            (*w as f64 / total as f64, cost)
        })
        .collect();
    CostDistribution::new(outcomes).expect("generated distribution is valid")
}

/// A plan of `1..=max_steps` random cost distributions.
pub fn random_plan(seed: u64, max_steps: usize, max_outcomes: usize) -> Vec<CostDistribution> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max_steps.max(1));
    (0..n)
        .map(|_| random_distribution(&mut rng, max_outcomes))
        .collect()
}

fn atom(fact: usize) -> Value {
    json!({"pred": format!("f{fact}"), "args": []})
}

fn literals<R: Rng>(rng: &mut R, facts: usize, p_pos: f64, p_neg: f64) -> Vec<Value> {
    let mut out = Vec::new();
    for f in 0..facts {
        let roll: f64 = rng.gen();
        if roll < p_pos {
            out.push(atom(f));
        } else if roll < p_pos + p_neg {
            out.push(json!({"pred": format!("f{f}"), "args": [], "neg": true}));
        }
    }
    out
}

fn network<R: Rng>(rng: &mut R, names: &[String], count: usize) -> (Vec<Value>, Vec<Value>) {
    let subtasks: Vec<Value> = (0..count)
        .map(|i| {
            let name = names.choose(rng).expect("nonempty choice");
            json!({"id": format!("s{i}"), "name": name, "args": []})
        })
        .collect();
    let mut ordering = Vec::new();
    for i in 0..count {
        for j in i + 1..count {
            if rng.gen_bool(0.6) {
                ordering.push(json!([format!("s{i}"), format!("s{j}")]));
            }
        }
    }
    (subtasks, ordering)
}

/// A zero-arity instance: at most `max_operators` operators (so at most as
/// many ground operators), every compound task with `1..=max_methods`
/// methods, and effects shared by all outcomes of an operator.
pub fn random_instance(seed: u64, config: &RandomConfig) -> RandomInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_ops = rng.gen_range(2..=config.max_operators.max(2));
    let n_compound = rng.gen_range(1..=config.max_compound_tasks.max(1));
    let facts = config.facts;

    let predicates: Vec<Value> = (0..facts)
        .map(|f| json!({"name": format!("f{f}"), "params": []}))
        .collect();

    let mut operators = Vec::new();
    for o in 0..n_ops {
        let precond = literals(&mut rng, facts, 0.2, 0.1);
        let mut add = Vec::new();
        let mut del = Vec::new();
        for f in 0..facts {
            let roll: f64 = rng.gen();
            if roll < 0.25 {
                add.push(atom(f));
            } else if roll < 0.4 {
                del.push(atom(f));
            }
        }
        let dist = random_distribution(&mut rng, config.max_outcomes);
        let outcomes: Vec<Value> = dist
            .outcomes()
            .iter()
            .map(|(p, c)| json!({"p": p, "add": add, "del": del, "cost": c}))
            .collect();
        operators.push(json!({
            "name": format!("o{o}"),
            "params": [],
            "precond": precond,
            "outcomes": outcomes,
        }));
    }

    let op_names: Vec<String> = (0..n_ops).map(|o| format!("o{o}")).collect();
    let compound_names: Vec<String> = (0..n_compound).map(|c| format!("c{c}")).collect();
    let mut methods = Vec::new();
    for c in 0..n_compound {
        let n_methods = rng.gen_range(1..=config.max_methods.max(1));
        for k in 0..n_methods {
            let count = if rng.gen_bool(0.1) {
                0
            } else {
                rng.gen_range(1..=config.max_subtasks.max(1))
            };
            let mut names = Vec::with_capacity(count);
            for _ in 0..count {
                let later: Vec<String> = compound_names[c + 1..].to_vec();
                let name = if rng.gen_bool(config.compound_bias) {
                    if !later.is_empty() && !rng.gen_bool(config.recursion) {
                        later.choose(&mut rng).cloned()
                    } else if rng.gen_bool(config.recursion) {
                        compound_names[..=c].choose(&mut rng).cloned()
                    } else {
                        None
                    }
                } else {
                    None
                };
                names.push(name.unwrap_or_else(|| op_names.choose(&mut rng).unwrap().clone()));
            }
            let subtasks: Vec<Value> = names
                .iter()
                .enumerate()
                .map(|(i, n)| json!({"id": format!("s{i}"), "name": n, "args": []}))
                .collect();
            let mut ordering = Vec::new();
            for i in 0..count {
                for j in i + 1..count {
                    if rng.gen_bool(0.6) {
                        ordering.push(json!([format!("s{i}"), format!("s{j}")]));
                    }
                }
            }
            let precond = if rng.gen_bool(0.3) {
                literals(&mut rng, facts, 0.25, 0.1)
            } else {
                Vec::new()
            };
            methods.push(json!({
                "name": format!("m{c}_{k}"),
                "task": {"name": format!("c{c}"), "args": []},
                "params": [],
                "precond": precond,
                "subtasks": subtasks,
                "ordering": ordering,
            }));
        }
    }

    let compound_tasks: Vec<Value> = compound_names
        .iter()
        .map(|c| json!({"name": c, "params": []}))
        .collect();
    let domain_doc = json!({
        "name": format!("random{seed}"),
        "types": {},
        "predicates": predicates,
        "operators": operators,
        "compound_tasks": compound_tasks,
        "methods": methods,
    });

    let init: Vec<Value> = (0..facts).filter(|_| rng.gen_bool(0.5)).map(atom).collect();
    let count = rng.gen_range(1..=2);
    let mut roots = compound_names[..1].to_vec();
    if n_compound > 1 {
        roots.push(compound_names[1].clone());
    }
    let (subtasks, ordering) = network(&mut rng, &roots, count);
    let problem_doc = json!({
        "objects": {},
        "init": init,
        "tasks": {"subtasks": subtasks, "ordering": ordering},
    });

    let domain_text = serde_json::to_string_pretty(&domain_doc).expect("serializable");
    let problem_text = serde_json::to_string_pretty(&problem_doc).expect("serializable");
    let domain = parse_domain(&domain_text).expect("generated domain is valid");
    let problem = parse_problem(&problem_text, &domain).expect("generated problem is valid");
    RandomInstance {
        seed,
        domain_text,
        problem_text,
        domain,
        problem,
    }
}
