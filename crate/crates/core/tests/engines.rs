mod common;

use common::{marine, marine_return, random_model, rel_close};
use riskhtn_core::evaluation::{oracle_enumerate, verify_derivation};
use riskhtn_core::search::{
    find_plans, find_plans_planspace, Bounds, SearchOptions, SearchOutcome,
};
use riskhtn_core::utility::UtilitySpec;

fn specs() -> Vec<UtilitySpec> {
    vec![
        UtilitySpec::Linear,
        UtilitySpec::averse(0.2),
        UtilitySpec::seeking(0.2),
    ]
}

#[test]
fn marine_engines_match_oracle() {
    for model in [marine(), marine_return()] {
        for spec in specs() {
            let bounds = Bounds::default();
            let oracle = oracle_enumerate(&model, &spec, bounds).unwrap();
            let best = oracle.best_plan().unwrap();
            for result in [
                find_plans(&model, &spec, SearchOptions::new(bounds)).unwrap(),
                find_plans_planspace(&model, &spec, SearchOptions::new(bounds), 10).unwrap(),
            ] {
                let sol = result.solution().expect("solved");
                println!("{spec}: {:?} {}", model.plan_to_strings(&sol.plan), sol.eu);
                assert!(
                    rel_close(sol.eu, best.eu, 1e-9),
                    "{} vs {}",
                    sol.eu,
                    best.eu
                );
                verify_derivation(&model, &sol.derivation, &sol.plan).unwrap();
            }
        }
    }
}

#[test]
fn random_engines_match_oracle() {
    let bounds = Bounds {
        max_depth: 4,
        max_nodes: 200_000,
    };
    let mut solved = 0;
    for seed in 0..80 {
        let model = random_model(seed);
        for spec in specs() {
            let oracle = oracle_enumerate(&model, &spec, bounds).unwrap();
            let state = find_plans(&model, &spec, SearchOptions::new(bounds)).unwrap();
            let plan = find_plans_planspace(&model, &spec, SearchOptions::new(bounds), 10).unwrap();
            match oracle.best_plan() {
                Some(best) => {
                    solved += 1;
                    for r in [&state, &plan] {
                        let sol = r
                            .solution()
                            .unwrap_or_else(|| panic!("seed {seed} {spec}: {:?}", r.outcome));
                        assert!(
                            rel_close(sol.eu, best.eu, 1e-9),
                            "seed {seed} {spec}: {} vs {}",
                            sol.eu,
                            best.eu
                        );
                        verify_derivation(&model, &sol.derivation, &sol.plan).unwrap();
                    }
                }
                None => {
                    for r in [&state, &plan] {
                        assert!(
                            !matches!(r.outcome, SearchOutcome::Solved(_)),
                            "seed {seed}"
                        );
                    }
                }
            }
        }
    }
    println!("solved {solved}");
}
