//! `stle`: monitor traces, repair trajectories, simulate and sweep scenarios.
//!
//! Exit codes:
//! - 0: satisfied / success
//! - 1: `monitor` found a violation
//! - 2: usage, input or runtime error
//! - 3: `repair` could not repair the trajectory

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use stle_core::files::{parse_environment, parse_trajectory, trajectory_to_json};
use stle_core::repair::{repair_trajectory, RepairAction, RepairConfig};
use stle_core::robustness::{prefix_series, rho, rho_smooth};
use stle_core::sim::{
    parse_thetas, run_scenario, scenario_formula, sweep, EnforcementReport, PlanTiming, RunConfig, ScenarioSource,
    SweepConfig,
};
use stle_core::spec::{parse_spec, SignalRegistry, Specification, DRIVING_LAWS};
use stle_core::trace::{build_trace, resolve_placeholders, Commands, PlannedTrajectory, Trace};
use stle_core::RepairError;

const EXIT_VIOLATED: u8 = 1;
const EXIT_ERROR: u8 = 2;
const EXIT_UNREPAIRABLE: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "stle",
    version,
    about = "STL monitoring and runtime enforcement of planned trajectories"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Robustness of a trace, or of a trajectory in an environment.
    Monitor(MonitorArgs),
    /// Repair one trajectory if its robustness is at or below the threshold.
    Repair(RepairArgs),
    /// Run scenarios with or without enforcement.
    Simulate(SimulateArgs),
    /// Run every threshold and seed on the given scenarios.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
struct SpecArgs {
    /// Specification file; the built-in driving laws when omitted.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Formula to check instead of the file's top-level one.
    #[arg(long = "top-formula")]
    top_formula: Option<String>,
    /// Sharpness of the smooth robustness.
    #[arg(long = "smoothness-a", default_value_t = 10.0)]
    smoothness_a: f64,
}

#[derive(Args, Debug)]
struct MonitorArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// Trace file, or trajectory file when `--environment` is given.
    input: PathBuf,
    #[arg(long)]
    environment: Option<PathBuf>,
    /// Resample a trajectory to this step, seconds.
    #[arg(long)]
    dt: Option<f64>,
}

#[derive(Args, Debug)]
struct RepairArgs {
    #[command(flatten)]
    spec: SpecArgs,
    trajectory: PathBuf,
    #[arg(long)]
    environment: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    theta: f64,
    /// Resample the trajectory to this step, seconds.
    #[arg(long)]
    dt: Option<f64>,
    /// Where to write the repaired trajectory; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write the repair log; stderr when omitted.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// Built-in scenario name or scenario file; repeatable.
    #[arg(long, required = true)]
    scenario: Vec<String>,
    /// Seed count `N` (seeds 0..N) or a comma list.
    #[arg(long, default_value = "1")]
    seeds: String,
    /// Planner waypoint spacing, seconds.
    #[arg(long, default_value_t = 0.1)]
    dt: f64,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value_t = 0.7)]
    theta: f64,
    /// Accepted for symmetry with `--no-enforce`; enforcement is on by default.
    #[arg(long, conflicts_with = "no_enforce")]
    enforce: bool,
    #[arg(long = "no-enforce")]
    no_enforce: bool,
    /// Also write each run's executed waypoints as CSV.
    #[arg(long = "dump-executed")]
    dump_executed: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// `lo:hi:step` or a comma list.
    #[arg(long, default_value = "0.0:1.2:0.1")]
    theta: String,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("STLE_LOG")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::Monitor(a) => monitor(a),
        Command::Repair(a) => repair(a),
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => run_sweep(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

/// Writes to stdout; a closed pipe ends output quietly.
fn emit(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_spec(args: &SpecArgs, registry: &SignalRegistry, required: bool) -> Result<Specification> {
    if !(args.smoothness_a > 0.0) {
        bail!("--smoothness-a must be positive");
    }
    let text = match &args.spec {
        Some(path) => read(path)?,
        None if required => bail!("--spec is required"),
        None => DRIVING_LAWS.to_string(),
    };
    let spec = parse_spec(&text, registry).context("cannot parse specification")?;
    Ok(match &args.top_formula {
        Some(name) => spec.with_top(name)?,
        None => spec,
    })
}

fn check_dt(dt: Option<f64>) -> Result<()> {
    match dt {
        Some(dt) if !(dt > 0.0) => bail!("--dt must be positive"),
        _ => Ok(()),
    }
}

fn load_trajectory(path: &Path, dt: Option<f64>) -> Result<(String, PlannedTrajectory)> {
    let text = read(path)?;
    let traj = parse_trajectory(&text).with_context(|| format!("cannot load trajectory {}", path.display()))?;
    let traj = match dt {
        Some(dt) if (dt - traj.dt()).abs() > 1e-12 => PlannedTrajectory::resample(traj.waypoints(), dt)?,
        _ => traj,
    };
    Ok((text, traj))
}

#[derive(Serialize)]
struct MonitorReport<'a> {
    formula: &'a str,
    rho: f64,
    smooth_rho: f64,
    satisfied: bool,
    /// Robustness of the prefix ending at each step.
    prefix: Vec<f64>,
    /// Placeholder values chosen, per step, in `slots` order.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    slots: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    assignment: Vec<Vec<f64>>,
}

fn monitor(args: MonitorArgs) -> Result<u8> {
    check_dt(args.dt)?;
    let registry = SignalRegistry::standard();
    let spec = load_spec(&args.spec, &registry, true)?;
    let formula = spec.top_formula();
    let trace = match &args.environment {
        Some(env_path) => {
            let (_, traj) = load_trajectory(&args.input, args.dt)?;
            let env = parse_environment(&read(env_path)?)
                .with_context(|| format!("cannot load environment {}", env_path.display()))?;
            build_trace(formula, &traj, &env, &registry, Commands::Placeholders)?
        }
        None => Trace::from_json(&read(&args.input)?, &registry)
            .with_context(|| format!("cannot load trace {}", args.input.display()))?,
    };
    let (assignment, trace) = resolve_placeholders(formula, &trace, &registry)?;
    let value = rho(formula, &trace, 0)?;
    let report = MonitorReport {
        formula: &spec.top,
        rho: value,
        smooth_rho: rho_smooth(formula, &trace, 0, args.spec.smoothness_a)?,
        satisfied: value > 0.0,
        prefix: prefix_series(formula, &trace)?,
        assignment: if assignment.slots.is_empty() {
            Vec::new()
        } else {
            assignment.values
        },
        slots: assignment.slots,
    };
    emit(&(serde_json::to_string_pretty(&report)? + "\n"))?;
    Ok(if report.satisfied { 0 } else { EXIT_VIOLATED })
}

#[derive(Serialize)]
struct RepairLog<'a> {
    formula: &'a str,
    theta: f64,
    #[serde(flatten)]
    action: &'a RepairAction,
}

fn repair(args: RepairArgs) -> Result<u8> {
    check_dt(args.dt)?;
    if !(args.theta >= 0.0) {
        bail!("--theta must be non-negative");
    }
    let registry = SignalRegistry::standard();
    let spec = load_spec(&args.spec, &registry, true)?;
    let formula = spec.top_formula();
    let (text, traj) = load_trajectory(&args.trajectory, args.dt)?;
    let env = parse_environment(&read(&args.environment)?)
        .with_context(|| format!("cannot load environment {}", args.environment.display()))?;
    let config = RepairConfig {
        theta: args.theta,
        smoothness: args.spec.smoothness_a,
        ..RepairConfig::default()
    };
    let open = build_trace(formula, &traj, &env, &registry, Commands::Placeholders)?;
    let (assignment, _) = resolve_placeholders(formula, &open, &registry)?;
    let (output, log) = match repair_trajectory(formula, &traj, &env, &registry, &assignment, &config) {
        Ok(None) if args.dt.is_none() => (text, None),
        Ok(None) => (trajectory_to_json(&traj), None),
        Ok(Some(fixed)) => {
            let line = serde_json::to_string(&RepairLog {
                formula: &spec.top,
                theta: args.theta,
                action: &fixed.action,
            })?;
            (trajectory_to_json(&fixed.trajectory), Some(line))
        }
        Err(
            e @ (RepairError::NoControllableSignal { .. }
            | RepairError::NoImprovement { .. }
            | RepairError::Infeasible { .. }
            | RepairError::NotControllable(_)),
        ) => {
            eprintln!("unrepairable: {e}");
            return Ok(EXIT_UNREPAIRABLE);
        }
        Err(e) => return Err(e.into()),
    };
    match &args.out {
        Some(path) => fs::write(path, &output).with_context(|| format!("cannot write {}", path.display()))?,
        None => emit(&output)?,
    }
    let log_text = log.map(|l| l + "\n").unwrap_or_default();
    match &args.log {
        Some(path) => fs::write(path, log_text).with_context(|| format!("cannot write {}", path.display()))?,
        None => eprint!("{log_text}"),
    }
    Ok(0)
}

fn parse_seeds(arg: &str) -> Result<Vec<u64>> {
    let arg = arg.trim();
    if !arg.contains(',') {
        let n: u64 = arg.parse().with_context(|| format!("bad --seeds `{arg}`"))?;
        if n == 0 {
            bail!("--seeds must name at least one seed");
        }
        return Ok((0..n).collect());
    }
    arg.split(',')
        .map(|s| s.trim().parse().with_context(|| format!("bad seed `{s}`")))
        .collect()
}

fn scenarios(args: &RunArgs) -> Result<Vec<ScenarioSource>> {
    args.scenario
        .iter()
        .map(|s| ScenarioSource::parse(s).with_context(|| format!("cannot load scenario `{s}`")))
        .collect()
}

fn base_config(args: &RunArgs) -> Result<RunConfig> {
    check_dt(Some(args.dt))?;
    let mut config = RunConfig::default();
    config.repair.smoothness = args.spec.smoothness_a;
    config.timing = PlanTiming {
        dt: args.dt,
        ..PlanTiming::default()
    };
    Ok(config)
}

fn out_dir(args: &RunArgs) -> Result<Option<&Path>> {
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    Ok(args.out.as_deref())
}

#[derive(Serialize)]
struct RunSummary<'a> {
    #[serde(flatten)]
    report: &'a EnforcementReport,
    mean_fix: f64,
    max_fix: f64,
    fix_pct: f64,
    avg_eval_ms: f64,
}

#[derive(Serialize)]
struct TickLine<'a> {
    scenario: &'a str,
    seed: u64,
    #[serde(flatten)]
    tick: &'a stle_core::enforce::TickRecord,
    objective: Option<f64>,
}

fn write_run(dir: &Path, report: &EnforcementReport, dump_executed: bool) -> Result<()> {
    let stem = format!("{}-{}", report.scenario, report.seed);
    let mut ticks = String::new();
    for tick in &report.ticks {
        ticks += &serde_json::to_string(&TickLine {
            scenario: &report.scenario,
            seed: report.seed,
            tick,
            objective: tick.objective(),
        })?;
        ticks.push('\n');
    }
    fs::write(dir.join(format!("ticks-{stem}.jsonl")), ticks)?;
    if dump_executed {
        let mut w = csv::Writer::from_path(dir.join(format!("executed-{stem}.csv")))?;
        w.write_record(["t", "x", "y", "speed", "acc", "steer"])?;
        for e in &report.executed {
            w.serialize((e.t, e.x, e.y, e.speed, e.acc, e.steer))?;
        }
        w.flush()?;
    }
    Ok(())
}

fn summary_of(report: &EnforcementReport) -> RunSummary<'_> {
    RunSummary {
        report,
        mean_fix: report.mean_fix(),
        max_fix: report.max_fix(),
        fix_pct: report.fix_pct(),
        avg_eval_ms: report.avg_eval_ms(),
    }
}

fn simulate(args: SimulateArgs) -> Result<u8> {
    if !(args.theta >= 0.0) {
        bail!("--theta must be non-negative");
    }
    let registry = SignalRegistry::standard();
    let spec = load_spec(&args.run.spec, &registry, false)?;
    let sources = scenarios(&args.run)?;
    let seeds = parse_seeds(&args.run.seeds)?;
    let mut config = base_config(&args.run)?;
    config.enforce = !args.no_enforce;
    config.repair.theta = args.theta;
    let dir = out_dir(&args.run)?;
    let top = args.run.spec.top_formula.as_deref();
    let mut reports = Vec::new();
    for source in &sources {
        let mut passed = 0;
        for &seed in &seeds {
            let scenario = source.instantiate(seed)?;
            let formula = scenario_formula(&spec, &scenario, top)?;
            let report = run_scenario(formula, &registry, &scenario, &config, seed)?;
            log::info!(
                "{} seed {seed}: rho {:.3}, {} fixes, {:?}",
                report.scenario,
                report.final_rho,
                report.fixes,
                report.termination
            );
            passed += report.pass as usize;
            if let Some(dir) = dir {
                write_run(dir, &report, args.dump_executed)?;
            }
            reports.push(report);
        }
        let mode = if config.enforce {
            format!("enforced, theta {}", args.theta)
        } else {
            "baseline".to_string()
        };
        emit(&format!(
            "{} ({mode}): {passed}/{} passed\n",
            source.name(),
            seeds.len()
        ))?;
    }
    if let Some(dir) = dir {
        let summary: Vec<RunSummary> = reports.iter().map(summary_of).collect();
        fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    }
    Ok(0)
}

fn run_sweep(args: SweepArgs) -> Result<u8> {
    let thetas = parse_thetas(&args.theta).with_context(|| format!("bad --theta `{}`", args.theta))?;
    if thetas.is_empty() || thetas.iter().any(|t| !(*t >= 0.0)) {
        bail!("--theta must list non-negative thresholds");
    }
    let registry = SignalRegistry::standard();
    let spec = load_spec(&args.run.spec, &registry, false)?;
    let sources = scenarios(&args.run)?;
    let config = SweepConfig {
        thetas,
        seeds: parse_seeds(&args.run.seeds)?,
        base: base_config(&args.run)?,
        top: args.run.spec.top_formula.clone(),
    };
    let report = sweep(&spec, &registry, &sources, &config)?;
    for s in &report.summaries {
        let line = format!(
            "{} theta {:.2}: {}/{} passed (baseline {:.0}%, +{:.0}%), {:.1} fixes/run, mean fix {:.3} m\n",
            s.scenario,
            s.theta,
            (s.pass_rate * s.runs as f64).round(),
            s.runs,
            100.0 * s.baseline_pass_rate,
            100.0 * s.improvement,
            s.fixes_per_run,
            s.mean_fix
        );
        // With no output directory the CSV goes to stdout, so keep it clean.
        if args.run.out.is_some() {
            emit(&line)?;
        } else {
            eprint!("{line}");
        }
    }
    match out_dir(&args.run)? {
        Some(dir) => {
            report.write_csv(fs::File::create(dir.join("sweep.csv"))?)?;
            fs::write(
                dir.join("summary.json"),
                serde_json::to_string_pretty(&report.summaries)?,
            )?;
        }
        None => {
            let mut csv = Vec::new();
            report.write_csv(&mut csv)?;
            emit(&String::from_utf8(csv)?)?;
        }
    }
    Ok(0)
}
