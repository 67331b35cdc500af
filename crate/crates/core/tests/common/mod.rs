#![allow(dead_code)]

use riskhtn_core::bundled;
use riskhtn_core::io::{parse_domain, parse_problem};
use riskhtn_core::model::GroundModel;
use riskhtn_core::random::{random_instance, RandomConfig};

pub fn load(domain: &str, problem: &str) -> GroundModel {
    let d = parse_domain(domain).unwrap();
    let p = parse_problem(problem, &d).unwrap();
    GroundModel::ground(&d, &p).unwrap()
}

pub fn marine() -> GroundModel {
    load(bundled::MARINE_DOMAIN, bundled::MARINE_PROBLEM)
}

pub fn marine_return() -> GroundModel {
    load(bundled::MARINE_DOMAIN, bundled::MARINE_RETURN_PROBLEM)
}

pub fn random_model(seed: u64) -> GroundModel {
    let inst = random_instance(seed, &RandomConfig::default());
    GroundModel::ground(&inst.domain, &inst.problem).unwrap()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300) || a == b
}
