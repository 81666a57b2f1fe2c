//! World state and its kinematic update.

use rand::Rng;
use serde::Serialize;

use super::scenario::Scenario;
use crate::trace::{LightColor, NpcKind, NpcPrediction, Point, PredictedEnvironment, Switches, TimedPoint, Weather};

pub const DEFAULT_WHEELBASE: f64 = 2.8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EgoState {
    pub x: f64,
    pub y: f64,
    /// Radians, counter-clockwise from +x.
    pub heading: f64,
    pub speed: f64,
    pub acc: f64,
    pub steer: f64,
}

impl EgoState {
    pub fn position(&self) -> Point {
        [self.x, self.y]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NpcState {
    pub id: String,
    pub kind: NpcKind,
    pub position: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LightState {
    pub id: String,
    pub color: LightColor,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorldState {
    pub time: f64,
    pub ego: EgoState,
    pub npcs: Vec<NpcState>,
    pub lights: Vec<LightState>,
    pub weather: Weather,
    /// Switches applied by the last command.
    pub switches: Switches,
}

/// Actuation for one world step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EgoCommand {
    pub acc: f64,
    pub steer: f64,
    pub switches: Switches,
}

impl WorldState {
    /// State at time zero.
    pub fn initial(scenario: &Scenario) -> WorldState {
        let route = scenario.route();
        let p = route.point_at(scenario.ego.s, scenario.ego.d);
        let ego = EgoState {
            x: p[0],
            y: p[1],
            heading: route.heading_at(scenario.ego.s),
            speed: scenario.ego.speed,
            acc: 0.0,
            steer: 0.0,
        };
        let mut w = WorldState {
            time: 0.0,
            ego,
            npcs: Vec::new(),
            lights: Vec::new(),
            weather: scenario.weather,
            switches: Switches::new(),
        };
        w.sync_scripts(scenario);
        w
    }

    fn sync_scripts(&mut self, scenario: &Scenario) {
        self.npcs = scenario
            .npcs
            .iter()
            .map(|n| NpcState {
                id: n.id.clone(),
                kind: n.kind,
                position: n.position_at(self.time),
            })
            .collect();
        self.lights = scenario
            .lights
            .iter()
            .map(|l| LightState {
                id: l.id.clone(),
                color: l.at(self.time).color,
            })
            .collect();
    }
}

/// Advances the world by `dt`: kinematic bicycle for the ego, scripts for
/// everything else. Speed never goes negative.
pub fn step_world(
    scenario: &Scenario,
    state: &WorldState,
    command: &EgoCommand,
    dt: f64,
    wheelbase: f64,
) -> WorldState {
    let ego = state.ego;
    let moved = EgoState {
        x: ego.x + ego.speed * dt * ego.heading.cos(),
        y: ego.y + ego.speed * dt * ego.heading.sin(),
        heading: ego.heading + ego.speed * command.steer * dt / wheelbase,
        speed: (ego.speed + command.acc * dt).max(0.0),
        acc: command.acc,
        steer: command.steer,
    };
    let mut next = WorldState {
        time: state.time + dt,
        ego: moved,
        npcs: Vec::new(),
        lights: Vec::new(),
        weather: state.weather,
        switches: command.switches.clone(),
    };
    next.sync_scripts(scenario);
    next
}

/// Error of [`predict_environment`].
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("prediction up to {requested:.2}s exceeds the scripts, which end at {available:.2}s")]
pub struct HorizonError {
    pub requested: f64,
    pub available: f64,
}

/// Prediction noise applied to participant positions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PredictionNoise {
    pub sigma: f64,
}

/// Ground-truth scripts from `state.time` over `horizon` seconds, sampled
/// every `dt`, optionally with Gaussian position noise.
pub fn predict_environment<R: Rng>(
    scenario: &Scenario,
    state: &WorldState,
    horizon: f64,
    dt: f64,
    noise: PredictionNoise,
    rng: &mut R,
) -> Result<PredictedEnvironment, HorizonError> {
    let end = state.time + horizon;
    if end > scenario.script_end() + 1e-9 {
        return Err(HorizonError {
            requested: end,
            available: scenario.script_end(),
        });
    }
    let steps = (horizon / dt).round().max(0.0) as usize;
    let npcs = scenario
        .npcs
        .iter()
        .map(|n| NpcPrediction {
            id: n.id.clone(),
            kind: n.kind,
            priority: n.priority,
            path: (0..=steps)
                .map(|i| {
                    let t = state.time + i as f64 * dt;
                    let p = n.position_at(t);
                    let (ex, ey) = if noise.sigma > 0.0 {
                        (gaussian(rng) * noise.sigma, gaussian(rng) * noise.sigma)
                    } else {
                        (0.0, 0.0)
                    };
                    TimedPoint {
                        t,
                        x: p[0] + ex,
                        y: p[1] + ey,
                    }
                })
                .collect(),
        })
        .collect();
    Ok(PredictedEnvironment {
        map: scenario.map.clone(),
        route_lane: scenario.route_lane.clone(),
        npcs,
        lights: scenario.lights.clone(),
        weather: scenario.weather,
        pass_margin: crate::trace::environment::default_pass_margin(),
    })
}

/// Standard normal sample (Box-Muller).
fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
