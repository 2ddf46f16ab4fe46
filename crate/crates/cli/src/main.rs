//! `gait`: optimize, verify and simulate periodic walking gaits of a planar
//! five-link biped.
//!
//! Exit status: 0 success (feasible gait), 1 usage or configuration error,
//! 2 infeasible result, 3 runtime failure.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use biped_gait::boundary::resolve_boundary;
use biped_gait::config::RunConfig;
use biped_gait::constraints::{evaluate_constraints, ConstraintReport};
use biped_gait::optimizer::{optimize_gait, GaitReport};
use biped_gait::polynomial::{GaitRecord, PolynomialGait};
use biped_gait::series::gait_series;
use biped_gait::simulate::{simulate_step, StepSimulation};
use biped_gait::GaitError;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::output::OutputSet;

#[derive(Debug, Parser)]
#[command(name = "gait", version, about = "Minimum-torque periodic gait synthesis for a planar five-link biped")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the genetic search and local refinement, then write the report,
    /// trajectory and plot series.
    Optimize(CommonArgs),
    /// Evaluate the objective and constraints of a stored gait.
    Verify(GaitArgs),
    /// Simulate one step of a stored gait under its feed-forward torques.
    SimulateStep(GaitArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// TOML configuration file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Random seed, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GaitArgs {
    /// Gait file: a JSON object with `coefficients` (25 values) and
    /// `duration`, such as `gait.json` or `report.json` from `optimize`.
    #[arg(long)]
    gait: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
}

/// Failure classes mapped onto exit codes.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl Failure {
    fn config(e: impl std::fmt::Display) -> Self {
        Failure::Usage(format!("configuration error: {e}"))
    }

    fn runtime(e: impl std::fmt::Display) -> Self {
        Failure::Runtime(e.to_string())
    }
}

const EXIT_USAGE: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Feasible,
    Infeasible,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Optimize(args) => run_optimize(args),
        Command::Verify(args) => run_verify(args),
        Command::SimulateStep(args) => run_simulate_step(args),
    };
    match result {
        Ok(Outcome::Feasible) => ExitCode::SUCCESS,
        Ok(Outcome::Infeasible) => ExitCode::from(EXIT_INFEASIBLE),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn load_config(args: &CommonArgs) -> Result<RunConfig, Failure> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path).map_err(|e| match e {
            GaitError::Io(io) => Failure::Usage(format!("cannot read {}: {io}", path.display())),
            other => Failure::config(other),
        })?,
        None => RunConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate().map_err(Failure::config)?;
    Ok(cfg)
}

fn load_gait(path: &Path) -> Result<PolynomialGait, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    let record: GaitRecord = serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("malformed gait file {}: {e}", path.display())))?;
    record
        .to_gait()
        .map_err(|e| Failure::Usage(format!("invalid gait in {}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize to JSON");
    s.push('\n');
    s
}

fn outcome(feasible: bool) -> Outcome {
    if feasible {
        Outcome::Feasible
    } else {
        Outcome::Infeasible
    }
}

fn log_constraints(report: &ConstraintReport) {
    for (name, v) in report.violations.named() {
        log::info!("  {name:<18} {v:.3e}");
    }
    log::info!(
        "objective {:.6e}, max violation {:.3e} ({})",
        report.objective,
        report.max_violation,
        if report.feasible { "feasible" } else { "INFEASIBLE" }
    );
}

fn run_optimize(args: &CommonArgs) -> Result<Outcome, Failure> {
    let cfg = load_config(args)?;
    log::info!("optimizing with seed {}", cfg.seed);
    let report = optimize_gait(&cfg.robot, &cfg.problem, &cfg.optimizer(), cfg.seed).map_err(Failure::runtime)?;
    let gait = report.gait().map_err(Failure::runtime)?;
    log_constraints(&report.constraints);
    log::info!("wall clock {:.3} s", report.wall_clock.as_secs_f64());

    let mut files = OutputSet::new();
    files.add("report.json", to_json(&report));
    files.add("gait.json", to_json(&GaitRecord::from(&gait)));
    files.add("timing.json", to_json(&serde_json::json!({ "wall_clock_seconds": report.wall_clock.as_secs_f64() })));
    files.add("history.jsonl", history_lines(&report));
    for table in gait_series(&gait, &cfg.robot, cfg.problem.grid_size) {
        files.add(format!("{}.csv", table.name), table.to_csv());
    }
    files.commit(&cfg.output_dir).map_err(|e| {
        Failure::Runtime(format!("cannot write outputs to {}: {e}", cfg.output_dir.display()))
    })?;
    log::info!("outputs written to {}", cfg.output_dir.display());
    Ok(outcome(report.feasible))
}

/// One JSON record per GA generation and refinement iteration.
fn history_lines(report: &GaitReport) -> String {
    let mut out = String::new();
    if let Some(ga) = &report.ga {
        for (i, v) in ga.history.iter().enumerate() {
            out.push_str(&serde_json::json!({ "layer": "ga", "step": i, "best_penalized": v }).to_string());
            out.push('\n');
        }
    }
    for (i, v) in report.refine.history.iter().enumerate() {
        out.push_str(&serde_json::json!({ "layer": "refine", "step": i + 1, "best_penalized": v }).to_string());
        out.push('\n');
    }
    out
}

fn run_verify(args: &GaitArgs) -> Result<Outcome, Failure> {
    let cfg = load_config(&args.common)?;
    let gait = load_gait(&args.gait)?;
    let (problem, _) = resolve_boundary(&cfg.problem, &cfg.robot).map_err(Failure::config)?;
    let report = evaluate_constraints(&gait, &cfg.robot, &problem);
    log_constraints(&report);
    print!("{}", to_json(&report));
    if args.common.out.is_some() {
        let mut files = OutputSet::new();
        files.add("verify.json", to_json(&report));
        files.commit(&cfg.output_dir).map_err(Failure::runtime)?;
    }
    Ok(outcome(report.feasible))
}

#[derive(Serialize)]
struct SimulationSummary<'a> {
    impact_time: f64,
    step_duration: f64,
    initial: &'a biped_gait::model::JointState,
    pre_impact: &'a biped_gait::model::JointState,
    post_impact: &'a biped_gait::model::JointState,
    impulse: [f64; 2],
    deviation: [f64; 10],
    max_deviation: f64,
}

fn simulation_csv(sim: &StepSimulation) -> String {
    let mut out = String::from("t,q1,q2,q3,q4,q5,qdot1,qdot2,qdot3,qdot4,qdot5\n");
    for s in &sim.trajectory {
        let values: Vec<String> = std::iter::once(s.t)
            .chain(s.state.q.iter().copied())
            .chain(s.state.qdot.iter().copied())
            .map(|v| v.to_string())
            .collect();
        out.push_str(&values.join(","));
        out.push('\n');
    }
    out
}

fn run_simulate_step(args: &GaitArgs) -> Result<Outcome, Failure> {
    let cfg = load_config(&args.common)?;
    let gait = load_gait(&args.gait)?;
    let sim = simulate_step(&gait, &cfg.robot, &cfg.simulation).map_err(Failure::runtime)?;
    let summary = SimulationSummary {
        impact_time: sim.impact_time,
        step_duration: gait.duration,
        initial: &sim.initial,
        pre_impact: &sim.pre_impact,
        post_impact: &sim.post_impact,
        impulse: sim.impulse,
        deviation: sim.deviation,
        max_deviation: sim.max_deviation,
    };
    log::info!(
        "impact at t = {:.5} s (T = {}), max deviation from the initial state {:.3e}",
        sim.impact_time,
        gait.duration,
        sim.max_deviation
    );
    print!("{}", to_json(&summary));
    if args.common.out.is_some() {
        let mut files = OutputSet::new();
        files.add("simulation.json", to_json(&summary));
        files.add("simulation.csv", simulation_csv(&sim));
        files.commit(&cfg.output_dir).map_err(Failure::runtime)?;
    }
    Ok(Outcome::Feasible)
}
