//! Tracking controller: turns a (possibly repaired) trajectory into
//! acceleration and steering.

use super::scenario::Scenario;
use super::world::{EgoState, WorldState};
use crate::trace::map::distance;
use crate::trace::{NpcKind, PlannedTrajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Tracking {
    /// Speed governor plus pure pursuit.
    #[default]
    Governor,
    /// The ego lands exactly on the planned state at each world step.
    Perfect,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerConfig {
    pub wheelbase: f64,
    pub max_accel: f64,
    pub max_brake: f64,
    /// Gain on speed error, 1/s.
    pub speed_gain: f64,
    /// How far ahead in time the speed reference is read.
    pub preview: f64,
    pub min_lookahead: f64,
    pub lookahead_time: f64,
    pub max_steer: f64,
    /// Brake hard when time to collision drops below this.
    pub ttc_brake: f64,
    /// Second difference of waypoint stations, in metres, above which a
    /// waypoint is a hold point. Plans accelerating at 4 m/s² with 0.1 s
    /// spacing stay at 0.04.
    pub kink_tolerance: f64,
    /// How far, in m/s, a waypoint's speed must fall short of the speed its
    /// predecessor predicts to count as a cap.
    pub dip_tolerance: f64,
    /// Sideways offset, in metres, of a waypoint from the midpoint of its
    /// neighbours above which it counts as a lateral shift. Plans drift at
    /// 0.05 m per waypoint, so their midpoints are off by 0.025 at most.
    pub shift_tolerance: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            wheelbase: super::world::DEFAULT_WHEELBASE,
            max_accel: 2.5,
            max_brake: 6.0,
            speed_gain: 2.0,
            preview: 0.3,
            min_lookahead: 4.0,
            lookahead_time: 0.8,
            max_steer: 0.5,
            ttc_brake: 1.0,
            kink_tolerance: 0.06,
            dip_tolerance: 0.05,
            shift_tolerance: 0.04,
        }
    }
}

/// Control output for one world step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Actuation {
    pub acc: f64,
    pub steer: f64,
    /// The collision guard overrode the trajectory.
    pub guard: bool,
}

/// Longitudinal command: track the previewed speed, but never faster than
/// lets the ego meet a later waypoint's speed by the time it reaches that
/// waypoint. A waypoint's speed is the smaller of its own speed field and
/// the speed implied by its distance from the previous waypoint.
///
/// Single-waypoint anomalies are read as standing constraints that bind for
/// as long as the plan is in use:
/// - a waypoint pulled back against both neighbours (a kink in the station
///   profile no acceleration limit explains) is a hold point, and the ego
///   stops on it;
/// - a speed below what the previous waypoint's speed and acceleration
///   predict is a cap from that waypoint on.
pub fn longitudinal(
    cfg: &ControllerConfig,
    scenario: &Scenario,
    ego: &EgoState,
    time: f64,
    plan: &PlannedTrajectory,
) -> f64 {
    let route = scenario.route();
    let here = route.project(ego.position()).s;
    let v = ego.speed;
    let reference = plan.sample(time + cfg.preview).speed;
    let mut acc = cfg.speed_gain * (reference - v);
    let wps = plan.waypoints();
    let stations: Vec<f64> = wps.iter().map(|w| route.project(w.position()).s).collect();
    for j in 0..wps.len() {
        let gap = stations[j] - here;
        let interior = j > 0 && j + 1 < wps.len();
        let hold = interior && {
            let before = stations[j] - stations[j - 1];
            let after = stations[j + 1] - stations[j];
            after - before > cfg.kink_tolerance
        };
        let cap = j > 0 && {
            let expected = (wps[j - 1].speed + wps[j - 1].acc * (wps[j].t - wps[j - 1].t)).max(0.0);
            wps[j].speed < expected - cfg.dip_tolerance
        };
        if hold && gap <= STOP_TOLERANCE {
            acc = -cfg.max_brake;
            break;
        }
        if cap && gap <= STOP_TOLERANCE {
            acc = acc.min(cfg.speed_gain * (wps[j].speed - v));
            continue;
        }
        if (wps[j].t <= time && !hold && !cap) || gap <= STOP_TOLERANCE {
            continue;
        }
        let mut target = if hold { 0.0 } else { wps[j].speed };
        if j > 0 {
            let implied = (stations[j] - stations[j - 1]) / (wps[j].t - wps[j - 1].t);
            target = target.min(implied.max(0.0));
        }
        if target < v {
            acc = acc.min((target * target - v * v) / (2.0 * gap));
        }
    }
    acc.clamp(-cfg.max_brake, cfg.max_accel)
}

/// Closer than this to a waypoint counts as being on it.
const STOP_TOLERANCE: f64 = 0.05;

/// Pure pursuit toward the first future waypoint at least one lookahead
/// distance away. A waypoint shifted sideways off the line through its
/// neighbours moves the target to that waypoint's lateral offset, and the
/// shift keeps binding for as long as the plan is in use.
pub fn lateral(
    cfg: &ControllerConfig,
    scenario: &Scenario,
    ego: &EgoState,
    time: f64,
    plan: &PlannedTrajectory,
) -> f64 {
    let ld = cfg.min_lookahead.max(cfg.lookahead_time * ego.speed);
    let wps = plan.waypoints();
    let mut target = wps
        .iter()
        .filter(|w| w.t > time)
        .find(|w| distance(w.position(), ego.position()) >= ld)
        .or(wps.last())
        .expect("non-empty plan")
        .position();
    let route = scenario.route();
    let offsets: Vec<f64> = wps.iter().map(|w| route.project(w.position()).d).collect();
    // The neighbours of a shifted waypoint deviate by half as much.
    let shifted = (1..offsets.len().saturating_sub(1))
        .map(|j| (j, (offsets[j] - 0.5 * (offsets[j - 1] + offsets[j + 1])).abs()))
        .filter(|&(_, dev)| dev > cfg.shift_tolerance)
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(j, _)| j);
    if let Some(j) = shifted {
        target = route.point_at(route.project(target).s, offsets[j]);
    }
    let dx = target[0] - ego.x;
    let dy = target[1] - ego.y;
    let dist = dx.hypot(dy);
    if dist < 1e-6 {
        return 0.0;
    }
    let alpha = dy.atan2(dx) - ego.heading;
    let steer = (2.0 * cfg.wheelbase * alpha.sin() / dist).atan();
    steer.clamp(-cfg.max_steer, cfg.max_steer)
}

/// Time to collision with the nearest participant ahead in the ego lane,
/// if the ego is closing on one.
pub fn time_to_collision(scenario: &Scenario, state: &WorldState) -> Option<f64> {
    let route = scenario.route();
    let ego = route.project(state.ego.position());
    let heading = [state.ego.heading.cos(), state.ego.heading.sin()];
    scenario
        .npcs
        .iter()
        .filter_map(|npc| {
            let p = npc.position_at(state.time);
            let f = route.project(p);
            let half = route.width / 2.0 + if npc.kind == NpcKind::Pedestrian { 0.5 } else { 1.0 };
            if (f.d - ego.d).abs() > half {
                return None;
            }
            let length = if npc.kind == NpcKind::Pedestrian { 1.5 } else { 5.0 };
            let gap = f.s - ego.s - length;
            if gap < -length {
                return None;
            }
            let vel = npc.velocity_at(state.time);
            let npc_along = vel[0] * heading[0] + vel[1] * heading[1];
            let closing = state.ego.speed - npc_along;
            (closing > 1e-6).then(|| gap.max(0.0) / closing)
        })
        .min_by(|a, b| a.partial_cmp(b).expect("finite"))
}

pub fn actuate(cfg: &ControllerConfig, scenario: &Scenario, state: &WorldState, plan: &PlannedTrajectory) -> Actuation {
    let mut acc = longitudinal(cfg, scenario, &state.ego, state.time, plan);
    let steer = lateral(cfg, scenario, &state.ego, state.time, plan);
    let guard = time_to_collision(scenario, state).is_some_and(|ttc| ttc < cfg.ttc_brake);
    if guard {
        acc = -cfg.max_brake;
    }
    Actuation { acc, steer, guard }
}
