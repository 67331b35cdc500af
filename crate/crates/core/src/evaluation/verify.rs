//! Replays a derivation against the model.

use crate::model::{applicable, progress, unify, Binding, GroundModel, Plan};
use crate::search::{DerivationStep, TraceEntry};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("step {step}: {message}")]
pub struct VerifyError {
    pub step: usize,
    pub message: String,
}

fn fail(step: usize, message: impl Into<String>) -> VerifyError {
    VerifyError {
        step,
        message: message.into(),
    }
}

/// Checks that `derivation` is a legal sequence of decompositions and
/// applications from the initial state and network, that it empties the
/// network, and that the applied operators are exactly `plan`.
pub fn verify_derivation(
    model: &GroundModel,
    derivation: &[TraceEntry],
    plan: &Plan,
) -> Result<(), VerifyError> {
    let mut state = model.init.clone();
    let mut network = model.initial_network.clone();
    let mut applied = Vec::new();
    for (i, entry) in derivation.iter().enumerate() {
        let id = entry.task_id.as_str();
        let Some(task) = network.get(id) else {
            return Err(fail(i, format!("no task `{id}` in the network")));
        };
        if !network.find_unconstrained_tasks().contains(&id) {
            return Err(fail(i, format!("task `{id}` has unfinished predecessors")));
        }
        match entry.step {
            DerivationStep::Decompose { method } => {
                let m = model.method(method);
                let binding = unify(task, &m.task, &Binding::new())
                    .ok_or_else(|| fail(i, format!("method {m} does not match `{id}`")))?;
                if !applicable(m, &state) {
                    return Err(fail(i, format!("method {m} is not applicable")));
                }
                network = network
                    .substitute(&binding)
                    .decompose(id, &m.task, &m.subtasks, &m.ordering)
                    .map_err(|e| fail(i, e.to_string()))?;
            }
            DerivationStep::Apply { op } => {
                let o = model.operator(op);
                let binding = unify(task, &o.task, &Binding::new())
                    .ok_or_else(|| fail(i, format!("operator {} does not match `{id}`", o.task)))?;
                if !applicable(o, &state) {
                    return Err(fail(i, format!("operator {} is not applicable", o.task)));
                }
                state = progress(&state, o, 0).map_err(|e| fail(i, e.to_string()))?;
                network = network
                    .without(id)
                    .map_err(|e| fail(i, e.to_string()))?
                    .substitute(&binding);
                applied.push(op);
            }
        }
    }
    if !network.is_empty() {
        return Err(fail(derivation.len(), "tasks remain after the last step"));
    }
    if applied != plan.steps {
        return Err(fail(
            derivation.len(),
            "applied operators differ from the plan",
        ));
    }
    Ok(())
}
