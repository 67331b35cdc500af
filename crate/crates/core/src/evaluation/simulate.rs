//! Seeded Monte Carlo execution of plans.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::utility::{eval_one_switch, eval_static, CostDistribution, UtilityError, UtilitySpec};

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRun {
    /// Sampled outcome index per step.
    pub trajectory: Vec<usize>,
    pub total_cost: f64,
    /// Resource levels `R_0, ..., R_n` with `R_{k+1} = R_k + c_k`.
    pub resources: Vec<f64>,
    /// `U_c(total_cost)` for static utilities, `U_d(R_n)` for one-switch.
    pub utility: f64,
    /// One-switch only: `U_d(R_k + c_k)` after every step.
    pub step_utilities: Vec<f64>,
}

impl SimulationRun {
    pub fn depleted(&self) -> bool {
        self.resources.iter().any(|r| *r < 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSummary {
    pub seed: u64,
    pub runs: usize,
    pub mean: f64,
    /// Sample variance of the realized utilities.
    pub variance: f64,
    pub std_error: f64,
    /// Empirical frequency of each outcome, per step.
    pub outcome_frequencies: Vec<Vec<f64>>,
    /// One-switch only: runs whose resource level fell below zero.
    pub depleted_runs: usize,
    pub mean_total_cost: f64,
    /// Every run, when requested.
    pub details: Vec<SimulationRun>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimulationError {
    #[error("number of runs must be at least 1")]
    NoRuns,
    #[error(transparent)]
    Utility(#[from] UtilityError),
}

fn sample(rng: &mut ChaCha8Rng, dist: &CostDistribution) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let outcomes = dist.outcomes();
    for (i, (p, _)) in outcomes.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    outcomes.len() - 1
}

/// Samples one execution of the plan.
pub fn simulate_run(
    rng: &mut ChaCha8Rng,
    plan: &[&CostDistribution],
    spec: &UtilitySpec,
) -> Result<SimulationRun, UtilityError> {
    let r0 = match *spec {
        UtilitySpec::OneSwitch {
            initial_resource, ..
        } => initial_resource,
        _ => 0.0,
    };
    let mut trajectory = Vec::with_capacity(plan.len());
    let mut resources = Vec::with_capacity(plan.len() + 1);
    let mut step_utilities = Vec::new();
    resources.push(r0);
    let mut r = r0;
    let mut total = 0.0;
    for dist in plan {
        let i = sample(rng, dist);
        let c = dist.outcomes()[i].1;
        trajectory.push(i);
        total += c;
        r += c;
        resources.push(r);
        if !spec.is_static() {
            step_utilities.push(eval_one_switch(spec, r)?);
        }
    }
    let utility = if spec.is_static() {
        eval_static(spec, total)?
    } else {
        eval_one_switch(spec, r)?
    };
    Ok(SimulationRun {
        trajectory,
        total_cost: total,
        resources,
        utility,
        step_utilities,
    })
}

/// Runs the plan `n_runs` times with a ChaCha generator seeded by `seed`.
pub fn simulate(
    plan: &[&CostDistribution],
    spec: &UtilitySpec,
    n_runs: usize,
    seed: u64,
    keep_runs: bool,
) -> Result<SimulationSummary, SimulationError> {
    if n_runs == 0 {
        return Err(SimulationError::NoRuns);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts: Vec<Vec<u64>> = plan.iter().map(|d| vec![0; d.len()]).collect();
    let mut utilities = Vec::with_capacity(n_runs);
    let mut details = Vec::new();
    let mut depleted = 0;
    let mut cost_sum = 0.0;
    for _ in 0..n_runs {
        let run = simulate_run(&mut rng, plan, spec)?;
        for (step, i) in run.trajectory.iter().enumerate() {
            counts[step][*i] += 1;
        }
        if !spec.is_static() && run.depleted() {
            depleted += 1;
        }
        cost_sum += run.total_cost;
        utilities.push(run.utility);
        if keep_runs {
            details.push(run);
        }
    }
    let n = n_runs as f64;
    let mean = utilities.iter().sum::<f64>() / n;
    let variance = if n_runs > 1 {
        utilities.iter().map(|u| (u - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(SimulationSummary {
        seed,
        runs: n_runs,
        mean,
        variance,
        std_error: (variance / n).sqrt(),
        outcome_frequencies: counts
            .iter()
            .map(|c| c.iter().map(|k| *k as f64 / n).collect())
            .collect(),
        depleted_runs: depleted,
        mean_total_cost: cost_sum / n,
        details,
    })
}
