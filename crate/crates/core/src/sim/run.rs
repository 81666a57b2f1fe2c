//! One simulated run: plan, enforce, track, advance.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::control::{actuate, ControllerConfig, Tracking};
use super::planner::{make_planner, PlanTiming};
use super::scenario::Scenario;
use super::world::{predict_environment, step_world, EgoCommand, EgoState, PredictionNoise, WorldState};
use crate::enforce::{enforce_tick, validate_commands, TickRecord};
use crate::error::Result;
use crate::repair::RepairConfig;
use crate::robustness::rho;
use crate::spec::{Formula, SignalRegistry};
use crate::trace::map::distance;
use crate::trace::{build_trace, Commands, Gear, NpcKind, PlannedTrajectory, Switches, Waypoint};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Threshold and search settings; `repair.theta` is the trigger level.
    pub repair: RepairConfig,
    pub enforce: bool,
    pub world_dt: f64,
    /// Seconds between planner ticks.
    pub tick: f64,
    pub timing: PlanTiming,
    pub tracking: Tracking,
    pub controller: ControllerConfig,
    pub noise: PredictionNoise,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            repair: RepairConfig {
                frozen_prefix: 1,
                ..RepairConfig::default()
            },
            enforce: true,
            world_dt: 0.1,
            tick: 0.5,
            timing: PlanTiming::default(),
            tracking: Tracking::Governor,
            controller: ControllerConfig::default(),
            noise: PredictionNoise::default(),
        }
    }
}

impl RunConfig {
    pub fn with_theta(theta: f64) -> Self {
        let mut config = RunConfig::default();
        config.repair.theta = theta;
        config
    }

    pub fn baseline() -> Self {
        RunConfig {
            enforce: false,
            ..RunConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Arrived,
    Collision,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExecutedStep {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub speed: f64,
    pub acc: f64,
    pub steer: f64,
    pub switches: Switches,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnforcementReport {
    pub scenario: String,
    pub seed: u64,
    pub theta: f64,
    pub enforced: bool,
    pub ticks: Vec<TickRecord>,
    pub termination: Termination,
    /// Simulated seconds.
    pub duration: f64,
    /// Robustness of the executed trace.
    pub final_rho: f64,
    pub pass: bool,
    pub fixes: usize,
    /// Positional difference of every applied fix, in metres.
    pub fix_sizes: Vec<f64>,
    /// Waypoints changed by every applied fix.
    pub fix_waypoints: Vec<usize>,
    pub command_flips: usize,
    /// World steps where the collision guard braked.
    pub guard_steps: usize,
    /// Wall time of the whole run.
    pub run_s: f64,
    #[serde(skip)]
    pub executed: Vec<ExecutedStep>,
}

impl EnforcementReport {
    pub fn max_fix(&self) -> f64 {
        self.fix_sizes.iter().copied().fold(0.0, f64::max)
    }

    pub fn mean_fix(&self) -> f64 {
        if self.fix_sizes.is_empty() {
            0.0
        } else {
            self.fix_sizes.iter().sum::<f64>() / self.fix_sizes.len() as f64
        }
    }

    /// Percentage of ticks that applied a fix.
    pub fn fix_pct(&self) -> f64 {
        if self.ticks.is_empty() {
            0.0
        } else {
            100.0 * self.fixes as f64 / self.ticks.len() as f64
        }
    }

    pub fn avg_eval_ms(&self) -> f64 {
        if self.ticks.is_empty() {
            0.0
        } else {
            self.ticks.iter().map(|t| t.eval_ms).sum::<f64>() / self.ticks.len() as f64
        }
    }

    /// The executed run as a trajectory.
    pub fn executed_trajectory(&self, dt: f64) -> Result<PlannedTrajectory> {
        let wps = self
            .executed
            .iter()
            .map(|e| Waypoint {
                t: e.t,
                x: e.x,
                y: e.y,
                speed: e.speed,
                acc: e.acc,
                steer: e.steer,
                gear: Gear::Drive,
            })
            .collect();
        Ok(PlannedTrajectory::new(wps, Some(dt))?)
    }
}

const COLLISION_VEHICLE: f64 = 2.0;
const COLLISION_PEDESTRIAN: f64 = 1.0;

fn collided(scenario: &Scenario, state: &WorldState) -> bool {
    state.npcs.iter().any(|n| {
        let r = if n.kind == NpcKind::Pedestrian {
            COLLISION_PEDESTRIAN
        } else {
            COLLISION_VEHICLE
        };
        distance(n.position, state.ego.position()) < r
    }) && !scenario.npcs.is_empty()
}

fn arrived(scenario: &Scenario, state: &WorldState) -> bool {
    scenario.route().project(state.ego.position()).s >= scenario.destination_s
}

/// Moves the ego onto the plan at `t`.
fn place_on_plan(plan: &PlannedTrajectory, t: f64, prev: &EgoState) -> EgoState {
    let w = plan.sample(t);
    let heading = if (w.x - prev.x).hypot(w.y - prev.y) > 1e-9 {
        (w.y - prev.y).atan2(w.x - prev.x)
    } else {
        prev.heading
    };
    EgoState {
        x: w.x,
        y: w.y,
        heading,
        speed: w.speed,
        acc: w.acc,
        steer: w.steer,
    }
}

/// Simulates `scenario` under `formula` and scores the executed trace.
pub fn run_scenario(
    formula: &Formula,
    registry: &SignalRegistry,
    scenario: &Scenario,
    config: &RunConfig,
    seed: u64,
) -> Result<EnforcementReport> {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut planner = make_planner(&scenario.planner);
    let mut state = WorldState::initial(scenario);
    let steps_per_tick = ((config.tick / config.world_dt).round() as usize).max(1);
    let total_steps = (scenario.time_limit / config.world_dt).round() as usize;

    let mut ticks = Vec::new();
    let mut executed = Vec::new();
    let mut plan: Option<PlannedTrajectory> = None;
    let mut switches = Switches::new();
    let mut fix_sizes = Vec::new();
    let mut fix_waypoints = Vec::new();
    let mut command_flips = 0;
    let mut guard_steps = 0;
    let mut termination = Termination::Timeout;

    let record = |state: &WorldState, switches: &Switches| ExecutedStep {
        t: state.time,
        x: state.ego.x,
        y: state.ego.y,
        speed: state.ego.speed,
        acc: state.ego.acc,
        steer: state.ego.steer,
        switches: switches.clone(),
    };

    if arrived(scenario, &state) {
        termination = Termination::Arrived;
    } else {
        for step in 0..total_steps {
            if step % steps_per_tick == 0 {
                let env = predict_environment(
                    scenario,
                    &state,
                    config.timing.horizon,
                    config.timing.dt,
                    config.noise,
                    &mut rng,
                )?;
                let proposed = planner.plan(scenario, &state, config.timing);
                let pending = planner.switches();
                if config.enforce {
                    let mut out = enforce_tick(formula, &proposed, &env, registry, &config.repair)?;
                    let (checked, flips) = validate_commands(formula, &out.open_trace, &out.assignment, &pending)?;
                    out.record.flips = flips;
                    command_flips += flips;
                    if let Some(action) = &out.record.action {
                        fix_sizes.push(action.positional_difference);
                        let changed = proposed
                            .waypoints()
                            .iter()
                            .zip(out.trajectory.waypoints())
                            .filter(|(a, b)| a != b)
                            .count();
                        fix_waypoints.push(changed);
                    }
                    switches = checked;
                    plan = Some(out.trajectory);
                    ticks.push(out.record);
                } else {
                    switches = pending;
                    plan = Some(proposed);
                }
            }
            executed.push(record(&state, &switches));
            let current = plan.as_ref().expect("planned at step 0");
            let next_time = (step + 1) as f64 * config.world_dt;
            state = match config.tracking {
                Tracking::Governor => {
                    let a = actuate(&config.controller, scenario, &state, current);
                    guard_steps += a.guard as usize;
                    let cmd = EgoCommand {
                        acc: a.acc,
                        steer: a.steer,
                        switches: switches.clone(),
                    };
                    step_world(scenario, &state, &cmd, config.world_dt, config.controller.wheelbase)
                }
                Tracking::Perfect => {
                    let mut next = step_world(
                        scenario,
                        &state,
                        &EgoCommand {
                            switches: switches.clone(),
                            ..EgoCommand::default()
                        },
                        config.world_dt,
                        config.controller.wheelbase,
                    );
                    next.ego = place_on_plan(current, next_time, &state.ego);
                    next
                }
            };
            state.time = next_time;
            if collided(scenario, &state) {
                termination = Termination::Collision;
                break;
            }
            if arrived(scenario, &state) {
                termination = Termination::Arrived;
                break;
            }
        }
    }
    executed.push(record(&state, &switches));

    let mut report = EnforcementReport {
        scenario: scenario.name.clone(),
        seed,
        theta: config.repair.theta,
        enforced: config.enforce,
        fixes: fix_sizes.len(),
        ticks,
        termination,
        duration: state.time,
        final_rho: 0.0,
        pass: false,
        fix_sizes,
        fix_waypoints,
        command_flips,
        guard_steps,
        run_s: 0.0,
        executed,
    };
    let trajectory = report.executed_trajectory(config.world_dt)?;
    let start = WorldState::initial(scenario);
    let truth = predict_environment(
        scenario,
        &start,
        state.time,
        config.world_dt,
        PredictionNoise::default(),
        &mut rng,
    )?;
    let recorded: Vec<Switches> = report.executed.iter().map(|e| e.switches.clone()).collect();
    let trace = build_trace(formula, &trajectory, &truth, registry, Commands::Recorded(&recorded))?;
    report.final_rho = rho(formula, &trace, 0)?;
    report.pass = report.final_rho > 0.0;
    report.run_s = started.elapsed().as_secs_f64();
    Ok(report)
}
