//! Acceptance suite: one PASS/FAIL line per criterion.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{marine_return, random_model, rel_close};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use riskhtn_core::evaluation::{
    audit_planspace_search, audit_state_search, oracle_enumerate, simulate, verify_derivation,
};
use riskhtn_core::model::GroundModel;
use riskhtn_core::random::random_plan;
use riskhtn_core::search::{
    find_plans, find_plans_planspace, Bounds, PlanSpaceSearch, SearchOptions, StateSearch,
};
use riskhtn_core::utility::{
    eval_one_switch, eval_static, operator_eu, plan_eu_exact, plan_eu_segmented, UtilitySpec,
};

const AVERSE_WITH: f64 = -31.94528049465325;
const AVERSE_WITHOUT: f64 = -55.56544882370932;
const SEEKING_WITH: f64 = -4.323323583816936;
const SEEKING_WITHOUT: f64 = -2.3004041769687085;
const FLIP_ALPHA: f64 = 0.1266234820190516;

const RANDOM_BOUNDS: Bounds = Bounds {
    max_depth: 4,
    max_nodes: 200_000,
};
const INSTANCES: usize = 100;

type Outcome = Result<String, String>;

fn attitudes() -> [UtilitySpec; 3] {
    [
        UtilitySpec::Linear,
        UtilitySpec::averse(0.2),
        UtilitySpec::seeking(0.2),
    ]
}

fn return_choice(
    model: &GroundModel,
    spec: &UtilitySpec,
    planspace: bool,
) -> Result<String, String> {
    let options = SearchOptions::new(Bounds::default());
    let result = if planspace {
        find_plans_planspace(model, spec, options, 10)
    } else {
        find_plans(model, spec, options)
    }
    .map_err(|e| e.to_string())?;
    let sol = result.solution().ok_or("no plan")?;
    let steps = model.plan_to_strings(&sol.plan);
    match steps.as_slice() {
        [only] => Ok(only.split('(').next().unwrap().to_string()),
        other => Err(format!("unexpected plan {other:?}")),
    }
}

fn criterion_1() -> Outcome {
    let model = marine_return();
    let with = model
        .lookup_operator("go_with_glider", &["d1", "g1"])
        .ok_or("missing operator")?;
    let without = model
        .lookup_operator("go_without_glider", &["d1"])
        .ok_or("missing operator")?;
    let cases = [
        (UtilitySpec::Linear, "go_without_glider", -10.0, -5.6),
        (
            UtilitySpec::averse(0.2),
            "go_with_glider",
            AVERSE_WITH,
            AVERSE_WITHOUT,
        ),
        (
            UtilitySpec::seeking(0.2),
            "go_without_glider",
            SEEKING_WITH,
            SEEKING_WITHOUT,
        ),
    ];
    for (spec, expected, eu_with, eu_without) in cases {
        let w = operator_eu(&spec, &model.operator(with).costs).map_err(|e| e.to_string())?;
        let wo = operator_eu(&spec, &model.operator(without).costs).map_err(|e| e.to_string())?;
        if !rel_close(w, eu_with, 1e-6) || !rel_close(wo, eu_without, 1e-6) {
            return Err(format!("{spec}: EU {w} / {wo}"));
        }
        for planspace in [false, true] {
            let choice = return_choice(&model, &spec, planspace)?;
            if choice != expected {
                return Err(format!("{spec}: chose {choice}"));
            }
        }
    }
    Ok("argmax exact for 3 attitudes, both engines".into())
}

fn criterion_2() -> Outcome {
    let model = marine_return();
    let averse = |alpha: f64| -> Result<bool, String> {
        let spec = UtilitySpec::exponential(-1.0, alpha).map_err(|e| e.to_string())?;
        Ok(return_choice(&model, &spec, false)? == "go_with_glider")
    };
    let (mut lo, mut hi) = (0.01, 1.0);
    if averse(lo)? || !averse(hi)? {
        return Err("decision does not flip on [0.01, 1]".into());
    }
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if averse(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let flip = 0.5 * (lo + hi);
    if (flip - FLIP_ALPHA).abs() > 1e-4 {
        return Err(format!("flip at {flip}, reference {FLIP_ALPHA}"));
    }
    for (alpha, expected) in [
        (FLIP_ALPHA - 1e-4, "go_without_glider"),
        (FLIP_ALPHA + 1e-4, "go_with_glider"),
    ] {
        let spec = UtilitySpec::exponential(-1.0, alpha).map_err(|e| e.to_string())?;
        if return_choice(&model, &spec, true)? != expected {
            return Err(format!("plan-space engine disagrees at alpha {alpha}"));
        }
    }
    Ok(format!("flip at alpha {flip:.9}"))
}

/// Seeds of the first `INSTANCES` random instances with at least one plan.
fn solvable_seeds() -> Result<Vec<u64>, String> {
    let mut seeds = Vec::new();
    for seed in 0..10_000u64 {
        let model = random_model(seed);
        let oracle = oracle_enumerate(&model, &UtilitySpec::Linear, RANDOM_BOUNDS)
            .map_err(|e| format!("seed {seed}: {e}"))?;
        if !oracle.plans.is_empty() && oracle.plans.len() <= 200 {
            seeds.push(seed);
            if seeds.len() == INSTANCES {
                return Ok(seeds);
            }
        }
    }
    Err("not enough solvable instances".into())
}

fn criterion_3(seeds: &[u64]) -> Outcome {
    let mut compared = 0;
    let mut choices = 0;
    for &seed in seeds {
        let model = random_model(seed);
        for spec in attitudes() {
            let oracle =
                oracle_enumerate(&model, &spec, RANDOM_BOUNDS).map_err(|e| e.to_string())?;
            if oracle.plans.len() > 1 {
                choices += 1;
            }
            let best = oracle.best_plan().ok_or("oracle lost its plans")?.eu;
            let options = SearchOptions::new(RANDOM_BOUNDS);
            for result in [
                find_plans(&model, &spec, options),
                find_plans_planspace(&model, &spec, options, 10),
            ] {
                let result = result.map_err(|e| e.to_string())?;
                let sol = result
                    .solution()
                    .ok_or_else(|| format!("seed {seed} {spec}: {:?}", result.outcome))?;
                if !rel_close(sol.eu, best, 1e-9) {
                    return Err(format!("seed {seed} {spec}: {} vs oracle {best}", sol.eu));
                }
                verify_derivation(&model, &sol.derivation, &sol.plan)
                    .map_err(|e| format!("seed {seed} {spec}: {e}"))?;
                compared += 1;
            }
        }
    }
    Ok(format!(
        "{} instances ({} with several plans), {compared} engine runs match the oracle",
        seeds.len(),
        choices / 3
    ))
}

fn criterion_5(seeds: &[u64]) -> Outcome {
    let mut checked = 0;
    for &seed in seeds {
        let model = random_model(seed);
        for spec in attitudes() {
            let options = SearchOptions::new(RANDOM_BOUNDS).audited();
            let state = StateSearch::new(&model, &spec).map_err(|e| e.to_string())?;
            let result = state.run(options).map_err(|e| e.to_string())?;
            let report = audit_state_search(
                &model,
                &spec,
                &result.audit,
                RANDOM_BOUNDS.max_depth,
                1_000_000,
            )
            .map_err(|e| e.to_string())?;
            if let Some(v) = report.violations.first() {
                return Err(format!("seed {seed} {spec} state engine {v}"));
            }
            checked += report.checked;
            let plan = PlanSpaceSearch::new(&model, &spec, 10).map_err(|e| e.to_string())?;
            let result = plan.run(options).map_err(|e| e.to_string())?;
            let report =
                audit_planspace_search(&plan, &result.planspace_audit, RANDOM_BOUNDS.max_depth)
                    .map_err(|e| e.to_string())?;
            if let Some(v) = report.violations.first() {
                return Err(format!("seed {seed} {spec} plan-space engine {v}"));
            }
            checked += report.checked;
        }
    }
    Ok(format!("{checked} expanded nodes audited, 0 violations"))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for i in 0..1000u64 {
        let plan = random_plan(i, 6, 3);
        let refs: Vec<_> = plan.iter().collect();
        let alpha = rng.gen_range(0.01..0.5);
        for spec in [
            UtilitySpec::Linear,
            UtilitySpec::averse(alpha),
            UtilitySpec::seeking(alpha),
        ] {
            let exact = plan_eu_exact(&spec, &refs).map_err(|e| e.to_string())?;
            let seg = plan_eu_segmented(&spec, &refs).map_err(|e| e.to_string())?;
            if !rel_close(seg, exact, 1e-9) {
                return Err(format!("plan {i} {spec}: {seg} vs {exact}"));
            }
        }
    }
    Ok("1000 plans x 3 utilities".into())
}

fn criterion_6() -> Outcome {
    let model = marine_return();
    let solo = model
        .lookup_operator("go_without_glider", &["d1"])
        .ok_or("missing operator")?;
    let dist = &model.operator(solo).costs;
    let n = 100_000;
    let mut lines = Vec::new();
    for (spec, analytic) in [
        (UtilitySpec::Linear, -5.6),
        (UtilitySpec::averse(0.2), AVERSE_WITHOUT),
        (UtilitySpec::seeking(0.2), SEEKING_WITHOUT),
    ] {
        let s = simulate(&[dist], &spec, n, 2024, false).map_err(|e| e.to_string())?;
        let bound = 3.0 * s.variance.sqrt() / (n as f64).sqrt();
        if (s.mean - analytic).abs() > bound {
            return Err(format!(
                "{spec}: mean {} vs {analytic}, bound {bound}",
                s.mean
            ));
        }
        if matches!(spec, UtilitySpec::Linear) && s.mean != s.mean_total_cost {
            return Err("linear mean utility differs from mean cost".into());
        }
        lines.push(format!("{}={:.4}", spec.name(), s.mean));
    }
    Ok(lines.join(" "))
}

fn criterion_7() -> Outcome {
    let alpha = 0.04;
    let grid: Vec<f64> = (0..=400).map(|i| -100.0 + 0.25 * i as f64).collect();
    for spec in [UtilitySpec::averse(alpha), UtilitySpec::seeking(alpha)] {
        let u = |c: f64| eval_static(&spec, c).unwrap();
        for w in grid.windows(2) {
            if u(w[0]) >= u(w[1]) {
                return Err(format!("{spec} not strictly increasing at {}", w[0]));
            }
        }
        let concave = matches!(spec, UtilitySpec::Exponential { attitude, .. } if attitude.coefficient() < 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let x: f64 = rng.gen_range(-100.0..0.0);
            let y: f64 = rng.gen_range(-100.0..0.0);
            if (x - y).abs() < 1e-3 {
                continue;
            }
            let mid = u(0.5 * (x + y));
            let chord = 0.5 * (u(x) + u(y));
            if (concave && mid <= chord) || (!concave && mid >= chord) {
                return Err(format!("{spec} midpoint test fails at ({x}, {y})"));
            }
        }
    }
    let mut worst_rel: f64 = 0.0;
    for a in [-1.0, 1.0] {
        let spec = UtilitySpec::exponential(a, 1e-6).map_err(|e| e.to_string())?;
        for &c in &grid {
            let err = (eval_static(&spec, c).unwrap() - c).abs();
            worst_rel = worst_rel.max(err / c.abs().max(1.0));
        }
    }
    if worst_rel > 1e-3 {
        return Err(format!("small-alpha limit off by {worst_rel}"));
    }
    let (d, h) = (5.0, 1e-5);
    let spec = UtilitySpec::one_switch(d, alpha, 100.0).map_err(|e| e.to_string())?;
    let u = |x: f64| eval_one_switch(&spec, x).unwrap();
    let mut signed = 0;
    for i in 0..=300 {
        let x = -100.0 + i as f64;
        let first = (u(x + h) - u(x - h)) / (2.0 * h);
        let second = (u(x + h) - 2.0 * u(x) + u(x - h)) / (h * h);
        let d1 = 1.0 + d * (-alpha * x).exp();
        let d2 = -d * alpha * (-alpha * x).exp();
        if first <= 0.0 || !rel_close(first, d1, 1e-6) {
            return Err(format!(
                "one-switch first derivative {first} vs {d1} at {x}"
            ));
        }
        // rounding error of the second difference is about 4 eps |U| / h^2
        let rounding = 4.0 * f64::EPSILON * u(x).abs().max(1.0) / (h * h);
        let resolvable = d2.abs() > rounding;
        if (resolvable && second >= 0.0) || (second - d2).abs() > (1e-6 * d2.abs()).max(rounding) {
            return Err(format!(
                "one-switch second derivative {second} vs {d2} at {x}"
            ));
        }
        signed += usize::from(resolvable);
    }
    Ok(format!(
        "shape checks hold, small-alpha relative error {worst_rel:.1e}, {signed}/301 second-difference signs resolved"
    ))
}

fn run(n: usize, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = f();
    let elapsed = start.elapsed();
    let (ok, detail) = match outcome {
        Ok(d) if elapsed <= budget => (true, d),
        Ok(d) => (false, format!("{d}; took {elapsed:?}, budget {budget:?}")),
        Err(e) => (false, e),
    };
    let tag = if ok { "PASS" } else { "FAIL" };
    println!(
        "criterion {n}: {tag} ({detail}; {:.2}s)",
        elapsed.as_secs_f64()
    );
    ok
}

fn main() -> ExitCode {
    let mut ok = true;
    ok &= run(1, Duration::from_secs(1), criterion_1);
    ok &= run(2, Duration::from_secs(5), criterion_2);
    let start = Instant::now();
    let seeds = solvable_seeds();
    let seeds = match seeds {
        Ok(s) => s,
        Err(e) => {
            println!("criterion 3: FAIL ({e})");
            println!("criterion 5: FAIL ({e})");
            return ExitCode::FAILURE;
        }
    };
    let search_budget = Duration::from_secs(60).saturating_sub(start.elapsed());
    let t3 = Instant::now();
    ok &= run(3, search_budget, || criterion_3(&seeds));
    let remaining = search_budget.saturating_sub(t3.elapsed());
    ok &= run(4, Duration::from_secs(10), criterion_4);
    ok &= run(5, remaining, || criterion_5(&seeds));
    ok &= run(6, Duration::from_secs(10), criterion_6);
    ok &= run(7, Duration::from_secs(10), criterion_7);
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
