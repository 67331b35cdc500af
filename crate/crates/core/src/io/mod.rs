//! File formats: JSON documents, plan reports and DOT export.

mod dot;
mod json;
mod report;

pub use dot::export_dot;
pub use json::{
    parse_domain, parse_problem, parse_utility, serialize_domain, serialize_problem,
    serialize_utility,
};
pub use report::{
    emit_plan_report, format_significant, parse_plan_steps, OperatorRow, PlanReport, ReportStats,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("{document} file, line {line}, column {column}: {message}")]
    Syntax {
        document: &'static str,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{document} file, at {path}: {message}")]
    Invalid {
        document: &'static str,
        path: String,
        message: String,
    },
}
