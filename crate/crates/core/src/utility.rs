//! Utility functions, operator and plan expected utilities.

use std::fmt;

/// Default cap on the number of enumerated outcome trajectories.
pub const DEFAULT_TRAJECTORY_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum UtilityError {
    #[error("{0}")]
    WrongEvaluator(&'static str),
    #[error("invalid utility parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid cost distribution: {0}")]
    InvalidDistribution(String),
    #[error("plan has {count} outcome trajectories, more than the cap of {cap}")]
    TrajectoryCap { count: u128, cap: u64 },
    #[error("outcome index {index} out of range at step {step}")]
    IndexOutOfRange { step: usize, index: usize },
    #[error("trajectory has {got} entries for a plan of {expected} steps")]
    TrajectoryLength { expected: usize, got: usize },
    #[error("success probability {0} outside (0, 1]")]
    InvalidProbability(f64),
}

/// Sign of the attitude coefficient `a` of the exponential utility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Attitude {
    /// `a = -1`, concave utility.
    Averse,
    /// `a = +1`, convex utility.
    Seeking,
}

impl Attitude {
    pub fn from_coefficient(a: f64) -> Result<Self, UtilityError> {
        if a == -1.0 {
            Ok(Attitude::Averse)
        } else if a == 1.0 {
            Ok(Attitude::Seeking)
        } else {
            Err(UtilityError::InvalidParameter(format!(
                "a must be -1 or +1 (got {a})"
            )))
        }
    }

    pub fn coefficient(self) -> f64 {
        match self {
            Attitude::Averse => -1.0,
            Attitude::Seeking => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UtilitySpec {
    Linear,
    Exponential {
        attitude: Attitude,
        alpha: f64,
    },
    OneSwitch {
        d: f64,
        alpha: f64,
        initial_resource: f64,
    },
}

fn positive(name: &str, v: f64) -> Result<f64, UtilityError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(UtilityError::InvalidParameter(format!(
            "{name} must be a finite number > 0 (got {v})"
        )))
    }
}

impl UtilitySpec {
    pub fn exponential(a: f64, alpha: f64) -> Result<Self, UtilityError> {
        Ok(UtilitySpec::Exponential {
            attitude: Attitude::from_coefficient(a)?,
            alpha: positive("alpha", alpha)?,
        })
    }

    pub fn one_switch(d: f64, alpha: f64, initial_resource: f64) -> Result<Self, UtilityError> {
        Ok(UtilitySpec::OneSwitch {
            d: positive("D", d)?,
            alpha: positive("alpha", alpha)?,
            initial_resource: positive("initial_resource", initial_resource)?,
        })
    }

    pub fn averse(alpha: f64) -> Self {
        UtilitySpec::Exponential {
            attitude: Attitude::Averse,
            alpha,
        }
    }

    pub fn seeking(alpha: f64) -> Self {
        UtilitySpec::Exponential {
            attitude: Attitude::Seeking,
            alpha,
        }
    }

    pub fn is_static(&self) -> bool {
        !matches!(self, UtilitySpec::OneSwitch { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            UtilitySpec::Linear => "neutral",
            UtilitySpec::Exponential {
                attitude: Attitude::Averse,
                ..
            } => "averse",
            UtilitySpec::Exponential {
                attitude: Attitude::Seeking,
                ..
            } => "seeking",
            UtilitySpec::OneSwitch { .. } => "one_switch",
        }
    }
}

impl fmt::Display for UtilitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UtilitySpec::Linear => write!(f, "linear"),
            UtilitySpec::Exponential { attitude, alpha } => {
                write!(
                    f,
                    "exponential(a={}, alpha={alpha})",
                    attitude.coefficient()
                )
            }
            UtilitySpec::OneSwitch {
                d,
                alpha,
                initial_resource,
            } => write!(f, "one_switch(D={d}, alpha={alpha}, R0={initial_resource})"),
        }
    }
}

/// Discrete distribution over strictly negative costs.
#[derive(Debug, Clone, PartialEq)]
pub struct CostDistribution {
    outcomes: Vec<(f64, f64)>,
}

impl CostDistribution {
    /// `outcomes` are `(probability, cost)` pairs.
    pub fn new(outcomes: Vec<(f64, f64)>) -> Result<Self, UtilityError> {
        if outcomes.is_empty() {
            return Err(UtilityError::InvalidDistribution("no outcomes".into()));
        }
        for (p, c) in &outcomes {
            if !(p.is_finite() && *p > 0.0 && *p <= 1.0) {
                return Err(UtilityError::InvalidDistribution(format!(
                    "probability {p} outside (0, 1]"
                )));
            }
            if !(c.is_finite() && *c < 0.0) {
                return Err(UtilityError::InvalidDistribution(format!(
                    "cost must be strictly negative (got {c})"
                )));
            }
        }
        let sum: f64 = outcomes.iter().map(|(p, _)| p).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(UtilityError::InvalidDistribution(format!(
                "probabilities sum to {sum}"
            )));
        }
        Ok(CostDistribution { outcomes })
    }

    pub fn certain(cost: f64) -> Result<Self, UtilityError> {
        Self::new(vec![(1.0, cost)])
    }

    pub fn outcomes(&self) -> &[(f64, f64)] {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn expected_cost(&self) -> f64 {
        self.outcomes.iter().map(|(p, c)| p * c).sum()
    }
}

/// `U_c(cost)`: linear or exponential.
pub fn eval_static(spec: &UtilitySpec, cost: f64) -> Result<f64, UtilityError> {
    match *spec {
        UtilitySpec::Linear => Ok(cost),
        UtilitySpec::Exponential { attitude, alpha } => {
            let a = attitude.coefficient();
            Ok(a * (a * alpha * cost).exp_m1() / alpha)
        }
        UtilitySpec::OneSwitch { .. } => Err(UtilityError::WrongEvaluator(
            "one-switch utility needs eval_one_switch",
        )),
    }
}

/// `U_d(x) = x + D(1 - e^{-αx})/α` at the resource level after execution.
pub fn eval_one_switch(spec: &UtilitySpec, resource_after: f64) -> Result<f64, UtilityError> {
    match *spec {
        UtilitySpec::OneSwitch { d, alpha, .. } => {
            Ok(resource_after - d * (-alpha * resource_after).exp_m1() / alpha)
        }
        _ => Err(UtilityError::WrongEvaluator(
            "eval_one_switch needs a one-switch utility",
        )),
    }
}

fn require_static(spec: &UtilitySpec) -> Result<(), UtilityError> {
    if spec.is_static() {
        Ok(())
    } else {
        Err(UtilityError::WrongEvaluator(
            "one-switch utility does not segment over plan steps",
        ))
    }
}

/// `Σ_i p_i · U_c(c_i)`.
pub fn operator_eu(spec: &UtilitySpec, dist: &CostDistribution) -> Result<f64, UtilityError> {
    require_static(spec)?;
    let mut eu = 0.0;
    for (p, c) in dist.outcomes() {
        eu += p * eval_static(spec, *c)?;
    }
    Ok(eu)
}

fn trajectory_count(plan: &[&CostDistribution], cap: u64) -> Result<u128, UtilityError> {
    let mut count: u128 = 1;
    for d in plan {
        count = count.saturating_mul(d.len() as u128);
        if count > cap as u128 {
            return Err(UtilityError::TrajectoryCap { count, cap });
        }
    }
    Ok(count)
}

/// Calls `visit(probability, total_cost)` for every outcome trajectory.
fn for_each_trajectory(
    plan: &[&CostDistribution],
    cap: u64,
    mut visit: impl FnMut(f64, f64) -> Result<(), UtilityError>,
) -> Result<(), UtilityError> {
    trajectory_count(plan, cap)?;
    let n = plan.len();
    let mut idx = vec![0usize; n];
    loop {
        let mut p = 1.0;
        let mut c = 0.0;
        for (d, i) in plan.iter().zip(&idx) {
            let (pi, ci) = d.outcomes()[*i];
            p *= pi;
            c += ci;
        }
        visit(p, c)?;
        let mut k = n;
        loop {
            if k == 0 {
                return Ok(());
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < plan[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Exact plan EU by enumerating every outcome trajectory.
pub fn plan_eu_exact(spec: &UtilitySpec, plan: &[&CostDistribution]) -> Result<f64, UtilityError> {
    plan_eu_exact_capped(spec, plan, DEFAULT_TRAJECTORY_CAP)
}

pub fn plan_eu_exact_capped(
    spec: &UtilitySpec,
    plan: &[&CostDistribution],
    cap: u64,
) -> Result<f64, UtilityError> {
    require_static(spec)?;
    let mut eu = 0.0;
    for_each_trajectory(plan, cap, |p, c| {
        eu += p * eval_static(spec, c)?;
        Ok(())
    })?;
    Ok(eu)
}

/// Expected one-switch utility of the resource level after the whole plan.
pub fn plan_eu_one_switch(
    spec: &UtilitySpec,
    plan: &[&CostDistribution],
    cap: u64,
) -> Result<f64, UtilityError> {
    let UtilitySpec::OneSwitch {
        initial_resource, ..
    } = *spec
    else {
        return Err(UtilityError::WrongEvaluator(
            "plan_eu_one_switch needs a one-switch utility",
        ));
    };
    let mut eu = 0.0;
    for_each_trajectory(plan, cap, |p, c| {
        eu += p * eval_one_switch(spec, initial_resource + c)?;
        Ok(())
    })?;
    Ok(eu)
}

/// Plan EU from per-step factors.
///
/// Linear: the sum of operator EUs. Exponential: `(a/α)(∏ M_i − 1)` with
/// `M_i = Σ p·e^{aαc}`, evaluated in log space.
pub fn plan_eu_segmented(
    spec: &UtilitySpec,
    plan: &[&CostDistribution],
) -> Result<f64, UtilityError> {
    match *spec {
        UtilitySpec::Linear => plan.iter().map(|d| operator_eu(spec, d)).sum(),
        UtilitySpec::Exponential { .. } => {
            let v = Valuation::new(spec)?;
            let w: f64 = plan.iter().map(|d| v.weight(d)).sum();
            Ok(v.eu_of_weight(w))
        }
        UtilitySpec::OneSwitch { .. } => Err(UtilityError::WrongEvaluator(
            "one-switch utility does not segment over plan steps",
        )),
    }
}

/// `Σ_i p(chosen_i) · U_c(c(chosen_i))` along one trajectory.
pub fn trajectory_eu(
    spec: &UtilitySpec,
    plan: &[&CostDistribution],
    trajectory: &[usize],
) -> Result<f64, UtilityError> {
    require_static(spec)?;
    if trajectory.len() != plan.len() {
        return Err(UtilityError::TrajectoryLength {
            expected: plan.len(),
            got: trajectory.len(),
        });
    }
    let mut eu = 0.0;
    for (step, (d, i)) in plan.iter().zip(trajectory).enumerate() {
        let Some((p, c)) = d.outcomes().get(*i) else {
            return Err(UtilityError::IndexOutOfRange { step, index: *i });
        };
        eu += p * eval_static(spec, *c)?;
    }
    Ok(eu)
}

/// `(∏ p_i)(∏ u_i)`; a failed step has utility 0.
pub fn plan_eu_success_model(
    success_probs: &[f64],
    utilities: &[f64],
) -> Result<f64, UtilityError> {
    if success_probs.len() != utilities.len() {
        return Err(UtilityError::TrajectoryLength {
            expected: success_probs.len(),
            got: utilities.len(),
        });
    }
    let mut p = 1.0;
    for q in success_probs {
        if !(*q > 0.0 && *q <= 1.0) {
            return Err(UtilityError::InvalidProbability(*q));
        }
        p *= q;
    }
    Ok(p * utilities.iter().product::<f64>())
}

/// Additive weight space for static utilities.
///
/// Every operator gets a weight `w > 0` and a plan's EU is a strictly
/// decreasing function of the sum of its operators' weights. Linear:
/// `w = -EU(o)`. Exponential: `w = -a·ln M(o)` with `M(o) = Σ p·e^{aαc}`, so
/// a plan's EU is `(a/α)(e^{-aW} - 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Valuation {
    spec: UtilitySpec,
}

impl Valuation {
    pub fn new(spec: &UtilitySpec) -> Result<Self, UtilityError> {
        require_static(spec)?;
        Ok(Valuation { spec: *spec })
    }

    pub fn spec(&self) -> &UtilitySpec {
        &self.spec
    }

    fn exp_params(&self) -> Option<(f64, f64)> {
        match self.spec {
            UtilitySpec::Exponential { attitude, alpha } => Some((attitude.coefficient(), alpha)),
            _ => None,
        }
    }

    pub fn weight(&self, dist: &CostDistribution) -> f64 {
        match self.exp_params() {
            None => -dist.expected_cost(),
            Some((a, alpha)) => {
                // log-sum-exp of ln p + aαc
                let terms: Vec<f64> = dist
                    .outcomes()
                    .iter()
                    .map(|(p, c)| p.ln() + a * alpha * c)
                    .collect();
                let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let ln_m = m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln();
                -a * ln_m
            }
        }
    }

    pub fn eu_of_weight(&self, w: f64) -> f64 {
        if w == f64::INFINITY {
            return f64::NEG_INFINITY;
        }
        match self.exp_params() {
            None => -w,
            Some((a, alpha)) => a * (-a * w).exp_m1() / alpha,
        }
    }

    /// Inverse of [`eu_of_weight`](Self::eu_of_weight).
    pub fn weight_of_eu(&self, eu: f64) -> f64 {
        if eu == f64::NEG_INFINITY {
            return f64::INFINITY;
        }
        match self.exp_params() {
            None => -eu,
            Some((a, alpha)) => -a * (a * alpha * eu).ln_1p(),
        }
    }

    /// EU of the concatenation of two plan fragments with EUs `g` and `h`.
    pub fn combine(&self, g: f64, h: f64) -> f64 {
        if g == f64::NEG_INFINITY || h == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        match self.exp_params() {
            None => g + h,
            Some((a, alpha)) => g + h + a * alpha * g * h,
        }
    }

    /// Unnormalized product form `(a/α)·∏M_i` for a total weight `w`.
    /// Linear utilities have no product form and return `-w`.
    pub fn core_of_weight(&self, w: f64) -> f64 {
        match self.exp_params() {
            None => -w,
            Some((a, alpha)) => a * (-a * w).exp() / alpha,
        }
    }

    pub fn weight_of_core(&self, core: f64) -> f64 {
        match self.exp_params() {
            None => -core,
            Some((a, alpha)) => -a * (a * alpha * core).ln(),
        }
    }
}
