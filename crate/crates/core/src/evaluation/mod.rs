//! Ground-truth enumeration, simulation and checks on planner output.

mod audit;
mod oracle;
mod simulate;
mod verify;

pub use audit::{audit_planspace_search, audit_state_search, AuditError, AuditReport};
pub use oracle::{
    enumerate_plans_from, exact_eu, oracle_enumerate, OracleError, OracleResult, OracleStats,
    ScoredPlan,
};
pub use simulate::{simulate, simulate_run, SimulationError, SimulationRun, SimulationSummary};
pub use verify::{verify_derivation, VerifyError};
