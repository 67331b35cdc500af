//! Risk-aware HTN planning with cost-variable operators.

pub mod bundled;
pub mod cvtdg;
pub mod evaluation;
pub mod io;
pub mod model;
pub mod random;
pub mod search;
pub mod utility;

pub use cvtdg::{annotate_expected_utilities, build_cvtdg, Cvtdg};
pub use model::{Domain, GroundModel, Plan, Problem};
pub use search::{
    find_plans, find_plans_planspace, Bounds, Engine, SearchOptions, SearchOutcome, SearchResult,
};
pub use utility::{CostDistribution, UtilitySpec};
