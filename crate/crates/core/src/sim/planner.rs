//! Stand-in motion planners.

use super::scenario::{PlannerSpec, Scenario};
use super::world::WorldState;
use crate::trace::{Gear, LightColor, PlannedTrajectory, Switches, Waypoint};

/// Planning horizon and waypoint spacing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanTiming {
    pub horizon: f64,
    pub dt: f64,
}

impl Default for PlanTiming {
    fn default() -> Self {
        PlanTiming { horizon: 8.0, dt: 0.1 }
    }
}

/// A planner proposes a trajectory and the switches it wants each tick.
pub trait Planner {
    fn plan(&mut self, scenario: &Scenario, state: &WorldState, timing: PlanTiming) -> PlannedTrajectory;

    /// Switch commands the planner sends along with the trajectory.
    fn switches(&self) -> Switches {
        Switches::new()
    }
}

pub fn make_planner(spec: &PlannerSpec) -> Box<dyn Planner + Send> {
    match spec {
        PlannerSpec::Cruise { speed, lateral_offset } => Box::new(Cruise {
            speed: *speed,
            lateral_offset: *lateral_offset,
        }),
        PlannerSpec::Lawful { speed } => Box::new(Lawful { speed: *speed }),
        PlannerSpec::Replay { trajectories } => Box::new(Replay {
            trajectories: trajectories.clone(),
            next: 0,
        }),
    }
}

const ACCEL: f64 = 2.0;
const DECEL: f64 = 4.0;
const LATERAL_RATE: f64 = 0.5;

/// Speed profile toward `target`, followed along the route with the lateral
/// offset moving toward `offset`. `cap(s)` bounds the speed at arc length `s`.
fn follow_route(
    scenario: &Scenario,
    state: &WorldState,
    timing: PlanTiming,
    target: f64,
    offset: f64,
    cap: impl Fn(f64) -> f64,
) -> PlannedTrajectory {
    let route = scenario.route();
    let start = route.project(state.ego.position());
    let n = (timing.horizon / timing.dt).round().max(1.0) as usize;
    let mut s = start.s;
    let mut d = start.d;
    let mut v = state.ego.speed;
    let mut wps = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let limit = target.min(cap(s)).max(0.0);
        let acc = ((limit - v) / timing.dt).clamp(-DECEL, ACCEL);
        let p = route.point_at(s, d);
        wps.push(Waypoint {
            t: state.time + i as f64 * timing.dt,
            x: p[0],
            y: p[1],
            speed: v,
            acc,
            steer: 0.0,
            gear: Gear::Drive,
        });
        let next_v = (v + acc * timing.dt).max(0.0);
        s += 0.5 * (v + next_v) * timing.dt;
        v = next_v;
        let step = LATERAL_RATE * timing.dt;
        d += (offset - d).clamp(-step, step);
    }
    PlannedTrajectory::new(wps, Some(timing.dt)).expect("uniform plan")
}

/// Cruises at a fixed speed and offset; blind to lights and limits.
#[derive(Debug, Clone)]
pub struct Cruise {
    pub speed: f64,
    pub lateral_offset: f64,
}

impl Planner for Cruise {
    fn plan(&mut self, scenario: &Scenario, state: &WorldState, timing: PlanTiming) -> PlannedTrajectory {
        follow_route(scenario, state, timing, self.speed, self.lateral_offset, |_| {
            f64::INFINITY
        })
    }
}

/// Cruises but stops a few metres before the first stopline when the light
/// will not be green on arrival.
#[derive(Debug, Clone)]
pub struct Lawful {
    pub speed: f64,
}

const STOP_GAP: f64 = 3.0;
const STOP_DECEL: f64 = 2.5;

impl Planner for Lawful {
    fn plan(&mut self, scenario: &Scenario, state: &WorldState, timing: PlanTiming) -> PlannedTrajectory {
        let route = scenario.route();
        let here = route.project(state.ego.position()).s;
        let line = scenario
            .map
            .artifact_positions(route, "stopline")
            .into_iter()
            .find(|s| *s > here);
        let light = scenario
            .lights
            .iter()
            .find(|l| l.lane == scenario.route_lane)
            .or(scenario.lights.first());
        let stop_at = match (line, light) {
            (Some(line), Some(light)) => {
                let gap = line - here;
                let eta = gap / self.speed.max(state.ego.speed).max(1.0);
                let arrival = light.at(state.time + eta).color;
                let now = light.at(state.time).color;
                let can_stop = state.ego.speed * state.ego.speed / (2.0 * 6.0) < gap;
                (arrival != LightColor::Green || now == LightColor::Red)
                    .then_some(line - STOP_GAP)
                    .filter(|_| can_stop)
            }
            _ => None,
        };
        follow_route(scenario, state, timing, self.speed, 0.0, |s| match stop_at {
            Some(stop) if s < stop + STOP_GAP => (2.0 * STOP_DECEL * (stop - s).max(0.0)).sqrt(),
            _ => f64::INFINITY,
        })
    }
}

/// Replays recorded trajectories, shifted so each starts now.
#[derive(Debug, Clone)]
pub struct Replay {
    pub trajectories: Vec<PlannedTrajectory>,
    pub next: usize,
}

impl Planner for Replay {
    fn plan(&mut self, _scenario: &Scenario, state: &WorldState, _timing: PlanTiming) -> PlannedTrajectory {
        let i = self.next.min(self.trajectories.len() - 1);
        self.next += 1;
        let src = &self.trajectories[i];
        let shift = state.time - src.start_time();
        let wps = src
            .waypoints()
            .iter()
            .map(|w| Waypoint { t: w.t + shift, ..*w })
            .collect();
        PlannedTrajectory::new(wps, Some(src.dt())).expect("shifted copy stays uniform")
    }
}
