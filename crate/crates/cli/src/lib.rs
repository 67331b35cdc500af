//! The `riskhtn` command line: plan, evaluate, enumerate, simulate and
//! export decomposition graphs.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{debug, info, warn};
use riskhtn_core::evaluation::{oracle_enumerate, simulate, OracleError};
use riskhtn_core::io::{export_dot, parse_domain, parse_problem, parse_utility, PlanReport};
use riskhtn_core::search::{
    find_plans, find_plans_planspace, Bounds, DerivationStep, SearchOutcome, DEFAULT_MAX_DEPTH,
    DEFAULT_MAX_NODES,
};
use riskhtn_core::{
    annotate_expected_utilities, build_cvtdg, GroundModel, Plan, SearchOptions, UtilitySpec,
};
use serde::Serialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;
pub const EXIT_BOUNDS: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "riskhtn",
    version,
    about = "Risk-aware HTN planning with cost-variable operators"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Find a plan of maximal expected utility.
    Plan(PlanArgs),
    /// Recompute the expected utility of a plan report.
    Eval(EvalArgs),
    /// Enumerate every plan within the bounds and score it.
    Oracle(OracleArgs),
    /// Monte Carlo execution of a plan.
    Simulate(SimulateArgs),
    /// Export the decomposition graph in DOT format.
    Tdg(TdgArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    State,
    Planspace,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Domain file (*.htn.json).
    #[arg(short = 'd', long)]
    pub domain: PathBuf,
    /// Problem file (*.prob.json).
    #[arg(short = 'p', long)]
    pub problem: PathBuf,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[arg(long, default_value_t = DEFAULT_MAX_DEPTH)]
    pub max_depth: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_NODES)]
    pub max_nodes: u64,
}

impl BoundArgs {
    fn bounds(&self) -> Bounds {
        Bounds {
            max_depth: self.max_depth,
            max_nodes: self.max_nodes,
        }
    }
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long, value_enum, default_value = "state")]
    pub engine: EngineArg,
    #[command(flatten)]
    pub bounds: BoundArgs,
    /// Unfolding rounds for graph annotation.
    #[arg(long, default_value_t = 10)]
    pub k_unfold: usize,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Utility file (*.util.json).
    #[arg(short = 'u', long)]
    pub utility: PathBuf,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Include search statistics in the report.
    #[arg(long)]
    pub stats: bool,
    #[arg(short = 'o', long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(short = 'u', long)]
    pub utility: PathBuf,
    /// Plan report to evaluate; `-` reads standard input.
    #[arg(long, default_value = "-")]
    pub plan: PathBuf,
    #[arg(short = 'o', long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(short = 'u', long)]
    pub utility: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub max_depth: usize,
    /// Cap on visited oracle nodes.
    #[arg(long, default_value_t = DEFAULT_MAX_NODES)]
    pub max_nodes: u64,
    #[arg(short = 'o', long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(short = 'u', long)]
    pub utility: PathBuf,
    /// Plan report to execute; without it the planner chooses the plan.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long, default_value_t = 10_000)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short = 'o', long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TdgArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Annotate with expected utilities under this utility.
    #[arg(short = 'u', long)]
    pub utility: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub k_unfold: usize,
    /// Print the annotation table instead of DOT.
    #[arg(long, requires = "utility")]
    pub annotations: bool,
    #[arg(short = 'o', long)]
    pub out: Option<PathBuf>,
}

/// A finished command: text for the output stream plus an exit code.
struct Finished {
    text: String,
    code: i32,
}

impl Finished {
    fn ok(text: String) -> Self {
        Finished {
            text,
            code: EXIT_OK,
        }
    }
}

#[derive(Debug)]
struct ExitError {
    code: i32,
    message: String,
}

fn exit(code: i32, message: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(ExitError {
        code,
        message: message.into(),
    })
}

impl std::fmt::Display for ExitError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for ExitError {}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_model(args: &ModelArgs) -> anyhow::Result<GroundModel> {
    let domain_text = read(&args.domain)?;
    let problem_text = read(&args.problem)?;
    let domain = parse_domain(&domain_text).with_context(|| args.domain.display().to_string())?;
    let problem = parse_problem(&problem_text, &domain)
        .with_context(|| args.problem.display().to_string())?;
    let model = GroundModel::ground(&domain, &problem)?;
    debug!(
        "grounded {} operators, {} methods",
        model.operators.len(),
        model.methods.len()
    );
    Ok(model)
}

fn load_utility(path: &Path) -> anyhow::Result<UtilitySpec> {
    let text = read(path)?;
    parse_utility(&text).with_context(|| path.display().to_string())
}

fn load_report(path: &Path) -> anyhow::Result<PlanReport> {
    let text = if path.as_os_str() == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .context("cannot read plan from standard input")?;
        buf
    } else {
        read(path)?
    };
    PlanReport::parse(&text).with_context(|| path.display().to_string())
}

fn solve(
    model: &GroundModel,
    spec: &UtilitySpec,
    args: &SearchArgs,
) -> anyhow::Result<(Plan, riskhtn_core::search::SearchStats)> {
    let options = SearchOptions::new(args.bounds.bounds());
    let result = match args.engine {
        EngineArg::State => find_plans(model, spec, options)?,
        EngineArg::Planspace => find_plans_planspace(model, spec, options, args.k_unfold)?,
    };
    info!(
        "search: {} expanded, {} generated, runtime {:?}",
        result.stats.nodes_expanded, result.stats.nodes_generated, result.stats.runtime
    );
    match result.outcome {
        SearchOutcome::Solved(solution) => {
            for entry in &solution.derivation {
                match entry.step {
                    DerivationStep::Decompose { method } => {
                        debug!("{}: {}", entry.task_id, model.method(method))
                    }
                    DerivationStep::Apply { op } => {
                        debug!("{}: {}", entry.task_id, model.operator(op).task)
                    }
                }
            }
            Ok((solution.plan, result.stats))
        }
        SearchOutcome::Failure => Err(exit(EXIT_FAILURE, "no plan exists within the depth bound")),
        SearchOutcome::BoundsExhausted => Err(exit(
            EXIT_BOUNDS,
            "search bounds exhausted before a plan was found",
        )),
    }
}

fn cmd_plan(args: &PlanArgs) -> anyhow::Result<Finished> {
    let model = load_model(&args.model)?;
    let spec = load_utility(&args.utility)?;
    let (plan, stats) = solve(&model, &spec, &args.search)?;
    let report = PlanReport::new(&model, &plan, &spec, args.stats.then_some(&stats))?;
    Ok(Finished::ok(report.to_json()))
}

fn cmd_eval(args: &EvalArgs) -> anyhow::Result<Finished> {
    let model = load_model(&args.model)?;
    let spec = load_utility(&args.utility)?;
    let given = load_report(&args.plan)?;
    let plan = given.plan(&model)?;
    if !model.is_executable(&plan) {
        return Err(anyhow!("plan is not executable from the initial state"));
    }
    let report = PlanReport::new(&model, &plan, &spec, None)?;
    if given.attitude == report.attitude && given.expected_utility != report.expected_utility {
        warn!(
            "report states EU {} but the plan evaluates to {}",
            given.expected_utility, report.expected_utility
        );
    }
    Ok(Finished::ok(report.to_json()))
}

#[derive(Serialize)]
struct OracleRow {
    steps: Vec<String>,
    expected_utility: f64,
}

#[derive(Serialize)]
struct OracleDoc {
    plans: Vec<OracleRow>,
    best: Option<usize>,
    nodes_visited: u64,
}

fn cmd_oracle(args: &OracleArgs) -> anyhow::Result<Finished> {
    let model = load_model(&args.model)?;
    let spec = load_utility(&args.utility)?;
    let bounds = Bounds {
        max_depth: args.max_depth,
        max_nodes: args.max_nodes,
    };
    let result = match oracle_enumerate(&model, &spec, bounds) {
        Ok(r) => r,
        Err(e @ OracleError::NodeCap(_)) => return Err(exit(EXIT_BOUNDS, e.to_string())),
        Err(e) => return Err(e.into()),
    };
    info!(
        "oracle: {} plans, {} nodes",
        result.plans.len(),
        result.stats.nodes_visited
    );
    let doc = OracleDoc {
        plans: result
            .plans
            .iter()
            .map(|p| OracleRow {
                steps: model.plan_to_strings(&p.plan),
                expected_utility: riskhtn_core::io::format_significant(p.eu, 9),
            })
            .collect(),
        best: result.best,
        nodes_visited: result.stats.nodes_visited,
    };
    let text = to_json(&doc);
    let code = if !result.plans.is_empty() {
        EXIT_OK
    } else if result.stats.pruned_by_depth > 0 {
        EXIT_BOUNDS
    } else {
        EXIT_FAILURE
    };
    Ok(Finished { text, code })
}

#[derive(Serialize)]
struct SimulationDoc {
    steps: Vec<String>,
    seed: u64,
    runs: usize,
    mean: f64,
    variance: f64,
    std_error: f64,
    expected_utility: f64,
    mean_total_cost: f64,
    depleted_runs: usize,
    outcome_frequencies: Vec<Vec<f64>>,
}

fn cmd_simulate(args: &SimulateArgs) -> anyhow::Result<Finished> {
    let model = load_model(&args.model)?;
    let spec = load_utility(&args.utility)?;
    let plan = match &args.plan {
        Some(path) => load_report(path)?.plan(&model)?,
        None => solve(&model, &spec, &args.search)?.0,
    };
    let start = Instant::now();
    let summary = simulate(
        &model.plan_distributions(&plan),
        &spec,
        args.runs,
        args.seed,
        false,
    )?;
    info!("simulation: {} runs in {:?}", args.runs, start.elapsed());
    let analytic = PlanReport::new(&model, &plan, &spec, None)?.expected_utility;
    let doc = SimulationDoc {
        steps: model.plan_to_strings(&plan),
        seed: summary.seed,
        runs: summary.runs,
        mean: summary.mean,
        variance: summary.variance,
        std_error: summary.std_error,
        expected_utility: analytic,
        mean_total_cost: summary.mean_total_cost,
        depleted_runs: summary.depleted_runs,
        outcome_frequencies: summary.outcome_frequencies,
    };
    Ok(Finished::ok(to_json(&doc)))
}

fn cmd_tdg(args: &TdgArgs) -> anyhow::Result<Finished> {
    let model = load_model(&args.model)?;
    let mut graph = build_cvtdg(&model, &model.initial_network);
    if let Some(path) = &args.utility {
        let spec = load_utility(path)?;
        graph = annotate_expected_utilities(graph, &model, &spec, args.k_unfold)?;
    }
    info!("decomposition graph: {} vertices", graph.vertex_count());
    let mut text = if args.annotations {
        graph.dump_annotations(&model)?
    } else {
        export_dot(&graph, &model)
    };
    if !text.ends_with('\n') {
        text.push('\n');
    }
    Ok(Finished::ok(text))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("document serializes");
    text.push('\n');
    text
}

fn dispatch(command: &Command) -> anyhow::Result<(Finished, Option<&Path>)> {
    Ok(match command {
        Command::Plan(a) => (cmd_plan(a)?, a.out.as_deref()),
        Command::Eval(a) => (cmd_eval(a)?, a.out.as_deref()),
        Command::Oracle(a) => (cmd_oracle(a)?, a.out.as_deref()),
        Command::Simulate(a) => (cmd_simulate(a)?, a.out.as_deref()),
        Command::Tdg(a) => (cmd_tdg(a)?, a.out.as_deref()),
    })
}

/// Runs one invocation and returns the process exit code. Results go to
/// `out` (or the `--out` file), diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{rendered}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{rendered}");
                EXIT_OK
            };
        }
    };
    let start = Instant::now();
    let result = dispatch(&cli.command).and_then(|(finished, path)| {
        match path {
            Some(p) => fs::write(p, &finished.text)
                .with_context(|| format!("cannot write {}", p.display()))?,
            None => out.write_all(finished.text.as_bytes())?,
        }
        Ok(finished.code)
    });
    info!("runtime {:?}", start.elapsed());
    match result {
        Ok(code) => code,
        Err(e) => {
            let code = e.downcast_ref::<ExitError>().map_or(EXIT_USAGE, |x| x.code);
            let _ = writeln!(err, "error: {e:#}");
            code
        }
    }
}
