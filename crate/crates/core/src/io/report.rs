//! Plan reports: the JSON document written by `plan` and read by `eval`.

use serde::{Deserialize, Serialize};

use super::ParseError;
use crate::model::{GroundModel, Plan, Task, Term};
use crate::search::SearchStats;
use crate::utility::{
    operator_eu, plan_eu_one_switch, plan_eu_segmented, UtilityError, UtilitySpec,
    DEFAULT_TRAJECTORY_CAP,
};

const DOC: &str = "plan";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorRow {
    pub operator: String,
    pub eu: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportStats {
    pub nodes_expanded: u64,
    pub nodes_generated: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanReport {
    pub domain: String,
    pub attitude: String,
    pub expected_utility: f64,
    pub steps: Vec<String>,
    pub operators: Vec<OperatorRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats: Option<ReportStats>,
}

/// Rounds `x` to `digits` significant digits.
pub fn format_significant(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    let text = format!("{:.*e}", digits.saturating_sub(1), x);
    text.parse().unwrap_or(x)
}

fn plan_eu(spec: &UtilitySpec, model: &GroundModel, plan: &Plan) -> Result<f64, UtilityError> {
    let dists = model.plan_distributions(plan);
    if spec.is_static() {
        plan_eu_segmented(spec, &dists)
    } else {
        plan_eu_one_switch(spec, &dists, DEFAULT_TRAJECTORY_CAP)
    }
}

impl PlanReport {
    pub fn new(
        model: &GroundModel,
        plan: &Plan,
        spec: &UtilitySpec,
        stats: Option<&SearchStats>,
    ) -> Result<Self, UtilityError> {
        let mut operators = Vec::with_capacity(plan.len());
        for step in &plan.steps {
            let op = model.operator(*step);
            let eu = if spec.is_static() {
                operator_eu(spec, &op.costs)?
            } else {
                plan_eu_one_switch(spec, &[&op.costs], DEFAULT_TRAJECTORY_CAP)?
            };
            operators.push(OperatorRow {
                operator: op.task.to_string(),
                eu: format_significant(eu, 9),
            });
        }
        Ok(PlanReport {
            domain: model.domain_name.clone(),
            attitude: spec.name().to_string(),
            expected_utility: format_significant(plan_eu(spec, model, plan)?, 9),
            steps: model.plan_to_strings(plan),
            operators,
            stats: stats.map(|s| ReportStats {
                nodes_expanded: s.nodes_expanded,
                nodes_generated: s.nodes_generated,
            }),
        })
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        serde_json::from_str(text).map_err(|e| ParseError::Syntax {
            document: DOC,
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    /// Resolves the report's steps against a ground model.
    pub fn plan(&self, model: &GroundModel) -> Result<Plan, ParseError> {
        parse_plan_steps(model, &self.steps)
    }
}

fn parse_call(text: &str) -> Option<Task> {
    let text = text.trim();
    let open = text.find('(')?;
    let inner = text[open + 1..].strip_suffix(')')?;
    let name = text[..open].trim();
    if name.is_empty() {
        return None;
    }
    let args = if inner.trim().is_empty() {
        Vec::new()
    } else {
        inner.split(',').map(|a| Term::parse(a.trim())).collect()
    };
    Some(Task::new(name, args))
}

/// Parses steps written as `name(arg,...)` into operator ids.
pub fn parse_plan_steps(model: &GroundModel, steps: &[String]) -> Result<Plan, ParseError> {
    let mut out = Vec::with_capacity(steps.len());
    for (i, s) in steps.iter().enumerate() {
        let invalid = |message: String| ParseError::Invalid {
            document: DOC,
            path: format!("steps[{i}]"),
            message,
        };
        let task = parse_call(s).ok_or_else(|| invalid(format!("malformed step `{s}`")))?;
        let id = model
            .operator_for(&task)
            .ok_or_else(|| invalid(format!("no ground operator `{s}`")))?;
        out.push(id);
    }
    Ok(Plan::new(out))
}

/// Report text for `plan`; stats are optional and runtime is never included.
pub fn emit_plan_report(
    model: &GroundModel,
    plan: &Plan,
    spec: &UtilitySpec,
    stats: Option<&SearchStats>,
) -> Result<String, UtilityError> {
    Ok(PlanReport::new(model, plan, spec, stats)?.to_json())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(format_significant(-31.94528049465325, 9), -31.9452805);
        assert_eq!(format_significant(-5.6, 9), -5.6);
        assert_eq!(format_significant(0.0, 9), 0.0);
        assert_eq!(format_significant(123456789012.0, 9), 123456789000.0);
    }

    #[test]
    fn call_syntax() {
        assert_eq!(
            parse_call("go(d1,g1)"),
            Some(Task::ground("go", &["d1", "g1"]))
        );
        assert_eq!(parse_call("noop()"), Some(Task::ground("noop", &[])));
        assert_eq!(parse_call("broken(d1"), None);
        assert_eq!(parse_call("(x)"), None);
    }
}
