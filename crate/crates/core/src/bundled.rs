//! Domain, problem and utility files shipped with the crate.

pub const MARINE_DOMAIN: &str = include_str!("../domains/marine.htn.json");
pub const MARINE_PROBLEM: &str = include_str!("../domains/marine.prob.json");
/// Diver at the target with only the return leg left.
pub const MARINE_RETURN_PROBLEM: &str = include_str!("../domains/marine_return.prob.json");
pub const ABSTRACT_DOMAIN: &str = include_str!("../domains/abstract.htn.json");
pub const ABSTRACT_PROBLEM: &str = include_str!("../domains/abstract.prob.json");

pub const NEUTRAL_UTILITY: &str = include_str!("../domains/neutral.util.json");
pub const AVERSE_UTILITY: &str = include_str!("../domains/averse.util.json");
pub const SEEKING_UTILITY: &str = include_str!("../domains/seeking.util.json");
pub const ONE_SWITCH_UTILITY: &str = include_str!("../domains/one_switch.util.json");

/// `(file name, domain text)` for every bundled domain.
pub const DOMAINS: &[(&str, &str)] = &[
    ("marine.htn.json", MARINE_DOMAIN),
    ("abstract.htn.json", ABSTRACT_DOMAIN),
];
