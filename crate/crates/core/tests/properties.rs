mod common;

use common::{load, marine, random_model, rel_close};
use proptest::prelude::*;
use riskhtn_core::bundled;
use riskhtn_core::cvtdg::build_cvtdg;
use riskhtn_core::evaluation::{oracle_enumerate, simulate};
use riskhtn_core::io::{export_dot, parse_domain, parse_problem, serialize_domain, ParseError};
use riskhtn_core::model::{applicable, progress, GroundModel, State, Task, TaskNetwork};
use riskhtn_core::random::{random_instance, RandomConfig};
use riskhtn_core::search::{
    find_plans, find_plans_planspace, Bounds, PlanSpaceSearch, SearchOptions,
};
use riskhtn_core::utility::{
    eval_static, plan_eu_exact, plan_eu_segmented, CostDistribution, UtilitySpec,
};

const SMALL: Bounds = Bounds {
    max_depth: 4,
    max_nodes: 200_000,
};

fn distribution() -> impl Strategy<Value = CostDistribution> {
    prop::collection::vec((1u32..10, 1u32..=40), 1..=3).prop_map(|raw| {
        let total: u32 = raw.iter().map(|(w, _)| w).sum();
        let outcomes = raw
            .iter()
            .map(|(w, c)| (*w as f64 / total as f64, -(*c as f64) / 4.0))
            .collect();
        CostDistribution::new(outcomes).unwrap()
    })
}

fn exponential() -> impl Strategy<Value = UtilitySpec> {
    (prop::bool::ANY, 0.001f64..1.0).prop_map(|(averse, alpha)| {
        UtilitySpec::exponential(if averse { -1.0 } else { 1.0 }, alpha).unwrap()
    })
}

fn static_spec() -> impl Strategy<Value = UtilitySpec> {
    prop_oneof![Just(UtilitySpec::Linear), exponential()]
}

fn facts_model(precondition: &[usize], init: &[usize], effects: bool) -> GroundModel {
    let atom = |f: &usize| format!(r#"{{"pred": "f{f}", "args": []}}"#);
    let pre: Vec<String> = precondition.iter().map(atom).collect();
    let init: Vec<String> = init.iter().map(atom).collect();
    let add = if effects {
        r#"[{"pred": "f0", "args": []}]"#
    } else {
        "[]"
    };
    let domain = format!(
        r#"{{"name": "facts", "types": {{}},
            "predicates": [{{"name": "f0", "params": []}}, {{"name": "f1", "params": []}},
                           {{"name": "f2", "params": []}}, {{"name": "f3", "params": []}}],
            "operators": [{{"name": "op", "params": [], "precond": [{}],
                            "outcomes": [{{"p": 1, "add": {add}, "del": [], "cost": -1}}]}}],
            "compound_tasks": [], "methods": []}}"#,
        pre.join(",")
    );
    let problem = format!(
        r#"{{"objects": {{}}, "init": [{}], "tasks": {{"subtasks": [], "ordering": []}}}}"#,
        init.join(",")
    );
    let d = parse_domain(&domain).unwrap();
    let p = parse_problem(&problem, &d).unwrap();
    GroundModel::ground_with(
        &d,
        &p,
        riskhtn_core::model::GroundOptions {
            relevance_filter: false,
        },
    )
    .unwrap()
}

/// Minimal DOT grammar: `digraph ID { (node [attrs]; | node -> node;)* }`
/// with every identifier quoted.
fn dot_is_well_formed(text: &str) -> bool {
    let Some(body) = text.strip_prefix("digraph cvtdg {") else {
        return false;
    };
    let Some(body) = body.strip_suffix('}') else {
        return false;
    };
    let mut depth = 0i32;
    let mut in_quote = false;
    let mut escaped = false;
    for ch in body.chars() {
        if in_quote {
            match (escaped, ch) {
                (false, '\\') => escaped = true,
                (false, '"') => in_quote = false,
                _ => escaped = false,
            }
            continue;
        }
        match ch {
            '"' => in_quote = true,
            '{' => depth += 1,
            '}' => depth -= 1,
            '[' | ']' => {}
            _ => {}
        }
        if depth < 0 {
            return false;
        }
    }
    if in_quote || depth != 0 {
        return false;
    }
    body.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .all(|line| {
            line.starts_with('"')
                && line.ends_with(';')
                && (line.contains(" -> \"") || (line.contains(" [") && line.ends_with("];")))
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn static_utility_is_strictly_increasing(spec in exponential(), c1 in -100.0f64..-0.01, gap in 1e-3f64..50.0) {
        let c2 = (c1 + gap).min(-1e-4);
        let UtilitySpec::Exponential { alpha, .. } = spec else { unreachable!() };
        // beyond this range exp(alpha * c) underflows against 1 in double precision
        prop_assume!(alpha * c1 >= -20.0 && alpha * (c2 - c1) >= 1e-4);
        prop_assert!(eval_static(&spec, c1).unwrap() < eval_static(&spec, c2).unwrap());
    }

    #[test]
    fn curvature_follows_attitude(spec in exponential(), x in -100.0f64..0.0, y in -100.0f64..0.0) {
        prop_assume!((x - y).abs() > 0.5);
        let UtilitySpec::Exponential { attitude, alpha } = spec else { unreachable!() };
        prop_assume!(alpha * (x - y).abs() > 1e-3 && alpha * x.min(y) >= -20.0);
        let u = |c: f64| eval_static(&spec, c).unwrap();
        let mid = u(0.5 * (x + y));
        let chord = 0.5 * (u(x) + u(y));
        if attitude.coefficient() < 0.0 {
            prop_assert!(mid > chord);
        } else {
            prop_assert!(mid < chord);
        }
    }

    #[test]
    fn segmentation_identity(spec in static_spec(), plan in prop::collection::vec(distribution(), 0..=6)) {
        let refs: Vec<&CostDistribution> = plan.iter().collect();
        let exact = plan_eu_exact(&spec, &refs).unwrap();
        let seg = plan_eu_segmented(&spec, &refs).unwrap();
        prop_assert!(rel_close(seg, exact, 1e-9), "{} vs {}", seg, exact);
    }

    #[test]
    fn neutral_argmax_is_min_expected_cost(plans in prop::collection::vec(prop::collection::vec(distribution(), 1..=4), 1..=6)) {
        let eus: Vec<f64> = plans
            .iter()
            .map(|p| plan_eu_exact(&UtilitySpec::Linear, &p.iter().collect::<Vec<_>>()).unwrap())
            .collect();
        let costs: Vec<f64> = plans
            .iter()
            .map(|p| p.iter().map(|d| -d.expected_cost()).sum::<f64>())
            .collect();
        let best_eu = eus.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let least_cost = costs.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert!(rel_close(best_eu, -least_cost, 1e-12));
        let argmax = eus.iter().position(|e| *e == best_eu).unwrap();
        prop_assert!(rel_close(costs[argmax], least_cost, 1e-12));
    }

    #[test]
    fn decompose_keeps_a_partial_order(
        n in 1usize..6,
        outer in prop::collection::vec((0usize..6, 0usize..6), 0..8),
        k in 0usize..4,
        inner in prop::collection::vec((0usize..4, 0usize..4), 0..5),
        target in 0usize..6,
    ) {
        let t = Task::ground("c", &[]);
        let nodes: Vec<(String, Task)> = (0..n).map(|i| (format!("t{i}"), t.clone())).collect();
        let ordering: Vec<(String, String)> = outer
            .iter()
            .filter(|(a, b)| a < b && *b < n)
            .map(|(a, b)| (format!("t{a}"), format!("t{b}")))
            .collect();
        let net = TaskNetwork::new(nodes, ordering).unwrap();
        let subtasks: Vec<(String, Task)> = (0..k).map(|i| (format!("s{i}"), Task::ground("p", &[]))).collect();
        let sub_order: Vec<(String, String)> = inner
            .iter()
            .filter(|(a, b)| a < b && *b < k)
            .map(|(a, b)| (format!("s{a}"), format!("s{b}")))
            .collect();
        let id = format!("t{}", target % n);
        let next = net.decompose(&id, &t, &subtasks, &sub_order).unwrap();
        prop_assert!(next.is_strict_partial_order());
        prop_assert_eq!(next.len(), n - 1 + k);
        for p in net.predecessors(&id) {
            for i in 0..k {
                let sub = format!("{id}.s{i}");
                prop_assert!(next.precedes(&p, &sub));
            }
        }
    }

    #[test]
    fn effect_free_progress_is_idempotent(init in prop::collection::btree_set(0usize..4, 0..4)) {
        let init: Vec<usize> = init.into_iter().collect();
        let model = facts_model(&[], &init, false);
        let op = &model.operators[0];
        let once = progress(&model.init, op, 0).unwrap();
        let twice = progress(&once, op, 0).unwrap();
        prop_assert_eq!(&once, &twice);
        prop_assert_eq!(&once, &model.init);
    }

    #[test]
    fn applicability_is_monotone(
        pre in prop::collection::btree_set(0usize..4, 0..4),
        small in prop::collection::btree_set(0usize..4, 0..4),
        extra in prop::collection::btree_set(0usize..4, 0..4),
    ) {
        let pre: Vec<usize> = pre.into_iter().collect();
        let model = facts_model(&pre, &[], true);
        let op = &model.operators[0];
        let atoms = |set: &std::collections::BTreeSet<usize>| -> State {
            State::from_atoms(
                model.atom_count(),
                set.iter().filter_map(|f| model.atom_id(&riskhtn_core::model::Atom::new(format!("f{f}"), &[]))),
            )
        };
        let s = atoms(&small);
        let big: std::collections::BTreeSet<usize> = small.union(&extra).cloned().collect();
        let s2 = atoms(&big);
        prop_assert!(s.is_subset(&s2));
        if applicable(op, &s) {
            prop_assert!(applicable(op, &s2));
        }
    }

    #[test]
    fn parse_errors_carry_a_location(cut in 0usize..4000, flip in 0usize..4000, byte in 0u8..128) {
        let text = bundled::MARINE_DOMAIN;
        let mut broken: Vec<u8> = text.as_bytes()[..cut.min(text.len())].to_vec();
        if !broken.is_empty() {
            let i = flip % broken.len();
            broken[i] = byte;
        }
        let broken = String::from_utf8_lossy(&broken).into_owned();
        if let Err(e) = parse_domain(&broken) {
            match &e {
                ParseError::Syntax { line, column, .. } => prop_assert!(*line >= 1 && *column <= broken.len() + 1),
                ParseError::Invalid { path, .. } => prop_assert!(!path.is_empty()),
            }
            prop_assert!(e.to_string().starts_with("domain file, "));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dot_export_is_well_formed(seed in 0u64..10_000) {
        let model = random_model(seed);
        let graph = build_cvtdg(&model, &model.initial_network);
        let dot = export_dot(&graph, &model);
        prop_assert!(dot_is_well_formed(&dot), "{}", dot);
    }

    #[test]
    fn engines_agree_and_are_deterministic(seed in 0u64..10_000, spec in static_spec()) {
        let model = random_model(seed);
        let options = SearchOptions::new(SMALL);
        let a = find_plans(&model, &spec, options).unwrap();
        let b = find_plans(&model, &spec, options).unwrap();
        prop_assert_eq!(a.solution().map(|s| &s.plan), b.solution().map(|s| &s.plan));
        prop_assert_eq!(a.stats.nodes_expanded, b.stats.nodes_expanded);
        let p = find_plans_planspace(&model, &spec, options, 10).unwrap();
        let q = find_plans_planspace(&model, &spec, options, 10).unwrap();
        prop_assert_eq!(p.solution().map(|s| &s.plan), q.solution().map(|s| &s.plan));
        prop_assert_eq!(p.stats.nodes_expanded, q.stats.nodes_expanded);
        match (a.solution(), p.solution()) {
            (Some(x), Some(y)) => prop_assert!(rel_close(x.eu, y.eu, 1e-9)),
            (None, None) => {}
            (x, y) => prop_assert!(false, "one engine solved: {:?} {:?}", x.is_some(), y.is_some()),
        }
    }

    #[test]
    fn linear_plans_minimize_expected_cost(seed in 0u64..10_000) {
        let model = random_model(seed);
        let oracle = oracle_enumerate(&model, &UtilitySpec::Linear, SMALL).unwrap();
        let least = oracle
            .plans
            .iter()
            .map(|p| model.plan_distributions(&p.plan).iter().map(|d| -d.expected_cost()).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        let result = find_plans(&model, &UtilitySpec::Linear, SearchOptions::new(SMALL)).unwrap();
        match result.solution() {
            Some(sol) => prop_assert!(rel_close(sol.eu, -least, 1e-9)),
            None => prop_assert!(oracle.plans.is_empty()),
        }
    }

    #[test]
    fn plan_space_estimates_only_tighten(seed in 0u64..10_000, spec in static_spec()) {
        let model = random_model(seed);
        let search = PlanSpaceSearch::new(&model, &spec, 10).unwrap();
        let result = search.run(SearchOptions::new(SMALL).audited()).unwrap();
        for parent in &result.planspace_audit {
            for child in search.refine(parent).unwrap() {
                // weights grow as expected utilities fall
                prop_assert!(child.f >= parent.f - 1e-12 * parent.f.abs().max(1.0));
            }
        }
    }

    #[test]
    fn oracle_ignores_method_order(seed in 0u64..10_000, shuffle in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let inst = random_instance(seed, &RandomConfig::default());
        let mut doc: serde_json::Value = serde_json::from_str(&inst.domain_text).unwrap();
        let methods = doc["methods"].as_array_mut().unwrap();
        methods.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(shuffle));
        let a = load(&inst.domain_text, &inst.problem_text);
        let b = load(&doc.to_string(), &inst.problem_text);
        for spec in [UtilitySpec::Linear, UtilitySpec::averse(0.2)] {
            let x = oracle_enumerate(&a, &spec, SMALL).unwrap();
            let y = oracle_enumerate(&b, &spec, SMALL).unwrap();
            prop_assert_eq!(x.plans.len(), y.plans.len());
            prop_assert_eq!(x.best_plan().map(|p| p.eu), y.best_plan().map(|p| p.eu));
        }
    }
}

#[test]
fn bundled_domains_round_trip() {
    for (name, text) in bundled::DOMAINS {
        let d = parse_domain(text).unwrap();
        let again = parse_domain(&serialize_domain(&d)).unwrap();
        assert_eq!(d, again, "{name}");
        for op in &d.operators {
            let total: f64 = op.outcomes.iter().map(|o| o.probability).sum();
            assert!((total - 1.0).abs() <= 1e-9, "{name}: {}", op.name);
            assert!(op.outcomes.iter().all(|o| o.cost < 0.0));
        }
    }
}

#[test]
fn marine_dot_counts_match_graph() {
    let model = marine();
    let graph = build_cvtdg(&model, &model.initial_network);
    let dot = export_dot(&graph, &model);
    assert!(dot_is_well_formed(&dot));
    let vertices = dot.lines().filter(|l| l.contains("shape=")).count();
    assert_eq!(vertices, graph.vertex_count());
    assert_eq!(dot.matches("shape=diamond").count(), 7);
}

#[test]
fn sampled_frequencies_converge() {
    let d = CostDistribution::new(vec![(0.8, -2.0), (0.15, -20.0), (0.05, -7.0)]).unwrap();
    let n = 100_000;
    for seed in [1, 2, 3] {
        let s = simulate(&[&d, &d], &UtilitySpec::Linear, n, seed, true).unwrap();
        for step in &s.outcome_frequencies {
            for ((p, _), f) in d.outcomes().iter().zip(step) {
                assert!((f - p).abs() <= 4.0 * (p * (1.0 - p) / n as f64).sqrt());
            }
        }
        for run in &s.details {
            assert_eq!(run.utility, run.total_cost);
        }
    }
}
