//! Fixtures shared by the benchmarks.

use riskhtn_core::bundled;
use riskhtn_core::io::{parse_domain, parse_problem};
use riskhtn_core::random::{random_instance, RandomConfig};
use riskhtn_core::GroundModel;

pub use riskhtn_core;

pub fn model(domain: &str, problem: &str) -> GroundModel {
    let d = parse_domain(domain).expect("bundled domain parses");
    let p = parse_problem(problem, &d).expect("bundled problem parses");
    GroundModel::ground(&d, &p).expect("bundled problem grounds")
}

pub fn marine() -> GroundModel {
    model(bundled::MARINE_DOMAIN, bundled::MARINE_PROBLEM)
}

/// The first `n` random instances with a nonempty initial network.
pub fn random_models(n: usize) -> Vec<GroundModel> {
    let cfg = RandomConfig::default();
    (0..)
        .map(|seed| random_instance(seed, &cfg))
        .filter_map(|inst| GroundModel::ground(&inst.domain, &inst.problem).ok())
        .filter(|m| !m.initial_network.is_empty())
        .take(n)
        .collect()
}
