//! Turns a planned trajectory plus its predicted environment into a trace.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};

use super::environment::{PredictedEnvironment, NO_ARTIFACT_DISTANCE};
use super::map::Lane;
use super::signal_trace::{Trace, Value};
use super::trajectory::{PlannedTrajectory, Waypoint};
use crate::error::TraceError;
use crate::spec::registry::split_call;
use crate::spec::{encode_bool, Formula, SignalRegistry, SignalSource};

/// Steering magnitude below which the ego is considered to go straight.
pub const STEER_DEADBAND: f64 = 0.05;

/// Boolean switch states; absent switches are off.
pub type Switches = BTreeMap<String, bool>;

/// Where command-derived signals come from.
#[derive(Debug, Clone, Copy)]
pub enum Commands<'a> {
    /// Unknown at planning time: one placeholder slot per switch signal.
    Placeholders,
    /// Executed values, one entry per trajectory step.
    Recorded(&'a [Switches]),
}

pub fn direction_code(steer: f64) -> f64 {
    if steer > STEER_DEADBAND {
        1.0
    } else if steer < -STEER_DEADBAND {
        2.0
    } else {
        0.0
    }
}

/// Evaluates trajectory- and environment-derived signals at a waypoint.
pub struct SignalContext<'a> {
    env: &'a PredictedEnvironment,
    registry: &'a SignalRegistry,
    route: &'a Lane,
    /// Arc lengths of artifacts along the route, by key.
    artifacts: RefCell<HashMap<String, Vec<f64>>>,
}

impl<'a> SignalContext<'a> {
    pub fn new(env: &'a PredictedEnvironment, registry: &'a SignalRegistry) -> Result<Self, TraceError> {
        let route = env
            .map
            .lane(&env.route_lane)
            .ok_or_else(|| TraceError::UnknownLane(env.route_lane.clone()))?;
        Ok(SignalContext {
            env,
            registry,
            route,
            artifacts: RefCell::new(HashMap::new()),
        })
    }

    pub fn route(&self) -> &Lane {
        self.route
    }

    pub fn env(&self) -> &PredictedEnvironment {
        self.env
    }

    /// Distance along the route to the artifact named by `key`, measured from
    /// the ego. The nearest artifact not yet passed by more than the pass
    /// margin is used.
    pub fn artifact_distance(&self, key: &str, position: [f64; 2]) -> Result<f64, TraceError> {
        let mut cache = self.artifacts.borrow_mut();
        let targets = cache
            .entry(key.to_string())
            .or_insert_with(|| self.env.map.artifact_positions(self.route, key));
        if targets.is_empty() {
            return Err(TraceError::MissingArtifact(key.to_string()));
        }
        let s = self.route.project(position).s;
        Ok(targets
            .iter()
            .map(|a| a - s)
            .find(|d| *d >= -self.env.pass_margin)
            .unwrap_or(NO_ARTIFACT_DISTANCE))
    }

    /// Signed lateral offset from the centerline of `lane` (`route` means
    /// the route lane).
    pub fn lane_offset(&self, lane: &str, position: [f64; 2]) -> Result<f64, TraceError> {
        let lane = if lane == "route" {
            self.route
        } else {
            self.env
                .map
                .lane(lane)
                .ok_or_else(|| TraceError::UnknownLane(lane.to_string()))?
        };
        Ok(lane.project(position).d)
    }

    fn priority(&self, pedestrians: bool, range: f64, wp: &Waypoint) -> bool {
        use super::environment::NpcKind;
        let ego_s = self.route.project(wp.position()).s;
        let half_band = 1.5 * self.route.width;
        self.env.npcs.iter().any(|npc| {
            let kind_ok = matches!(
                (npc.kind, pedestrians),
                (NpcKind::Pedestrian, true) | (NpcKind::Vehicle, false)
            );
            if !kind_ok || !npc.has_priority() {
                return false;
            }
            let f = self.route.project(npc.position_at(wp.t));
            let ahead = f.s - ego_s;
            (0.0..=range).contains(&ahead) && f.d.abs() <= half_band
        })
    }

    /// Value of a non-command signal at `wp`.
    pub fn value(&self, signal: &str, wp: &Waypoint) -> Result<f64, TraceError> {
        match signal {
            "speed" => return Ok(wp.speed),
            "acc" => return Ok(wp.acc),
            "direction" => return Ok(direction_code(wp.steer)),
            "fog" => return Ok(self.env.weather.fog),
            "snow" => return Ok(self.env.weather.snow),
            "rain" => return Ok(self.env.weather.rain),
            "TL(color)" | "TL(blink)" => {
                let light = self
                    .env
                    .route_light()
                    .ok_or_else(|| TraceError::MissingArtifact("traffic light".into()))?;
                let phase = light.at(wp.t);
                return Ok(if signal == "TL(color)" {
                    phase.color.code()
                } else {
                    encode_bool(phase.blink)
                });
            }
            _ => {}
        }
        if let Some((head, arg)) = split_call(signal) {
            match head {
                "D" => return self.artifact_distance(arg, wp.position()),
                "Lane" => return self.lane_offset(arg, wp.position()),
                "PriorityV" | "PriorityP" => {
                    let range: f64 = arg.parse().map_err(|_| TraceError::NoSource(signal.to_string()))?;
                    return Ok(encode_bool(self.priority(head == "PriorityP", range, wp)));
                }
                _ => {}
            }
        }
        Err(TraceError::NoSource(signal.to_string()))
    }

    fn is_command(&self, signal: &str) -> Result<bool, TraceError> {
        let info = self
            .registry
            .resolve(signal)
            .ok_or_else(|| TraceError::NoSource(signal.to_string()))?;
        Ok(info.source == SignalSource::Command)
    }
}

/// Builds the trace of the signals referenced by `formula`.
pub fn build_trace(
    formula: &Formula,
    trajectory: &PlannedTrajectory,
    env: &PredictedEnvironment,
    registry: &SignalRegistry,
    commands: Commands<'_>,
) -> Result<Trace, TraceError> {
    build_trace_for(&formula.signals(), trajectory, env, registry, commands)
}

/// Builds a trace with the given signal columns.
pub fn build_trace_for(
    signals: &[String],
    trajectory: &PlannedTrajectory,
    env: &PredictedEnvironment,
    registry: &SignalRegistry,
    commands: Commands<'_>,
) -> Result<Trace, TraceError> {
    let ctx = SignalContext::new(env, registry)?;
    let n = trajectory.len();
    if let Commands::Recorded(rec) = commands {
        if rec.len() != n {
            return Err(TraceError::LengthMismatch {
                signal: "commands".into(),
                found: rec.len(),
                expected: n,
            });
        }
    }
    let mut columns = Vec::with_capacity(signals.len());
    let mut next_slot = 0;
    for name in signals {
        let column: Vec<Value> = if ctx.is_command(name)? {
            match commands {
                Commands::Placeholders => {
                    let slot = next_slot;
                    next_slot += 1;
                    vec![Value::Placeholder(slot); n]
                }
                Commands::Recorded(rec) => rec
                    .iter()
                    .map(|sw| Value::Num(encode_bool(sw.get(name).copied().unwrap_or(false))))
                    .collect(),
            }
        } else {
            trajectory
                .waypoints()
                .iter()
                .map(|wp| ctx.value(name, wp).map(Value::Num))
                .collect::<Result<_, _>>()?
        };
        columns.push(column);
    }
    Trace::with_len(trajectory.dt(), trajectory.start_time(), n, signals.to_vec(), columns)
}
