//! Domain model: types, lifted domains, states, task networks and grounding.

mod domain;
mod ground;
mod network;
mod state;
mod types;

use std::fmt;

pub use domain::{Domain, Method, Operator, Outcome, Subtask, PROBABILITY_TOLERANCE};
pub use ground::{
    applicable, progress, GroundMethod, GroundModel, GroundOperator, GroundOptions, GroundOutcome,
    MethodId, OpId, Plan, Preconditioned, Problem,
};
pub use network::{substitute_task, unify, Binding, TaskNetwork};
pub use state::{AtomId, State};
pub use types::{Atom, Literal, Param, Task, Term, TypeHierarchy, Universe, ROOT_TYPE};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("invalid type: {0}")]
    InvalidType(String),
    #[error("invalid task network: {0}")]
    Network(String),
    #[error("operator `{0}` is not applicable")]
    Inapplicable(String),
    #[error("operator `{operator}` has no outcome {index}")]
    InvalidOutcome { operator: String, index: usize },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GroundError {
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("unknown object {0}")]
    UnknownObject(String),
    #[error("undeclared predicate `{0}`")]
    UndeclaredPredicate(String),
    #[error("{0}")]
    Invalid(String),
}

/// A model validation failure with a path to the offending element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationError {
    pub path: String,
    pub message: String,
}

impl ValidationError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        ValidationError {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl std::error::Error for ValidationError {}
