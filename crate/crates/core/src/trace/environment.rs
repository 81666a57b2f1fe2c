//! Predicted environment over a planning horizon.

use serde::{Deserialize, Serialize};

use super::map::{MapData, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum LightColor {
    Yellow,
    Green,
    Red,
    Black,
}

impl LightColor {
    pub fn code(self) -> f64 {
        match self {
            LightColor::Yellow => 0.0,
            LightColor::Green => 1.0,
            LightColor::Red => 2.0,
            LightColor::Black => 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LightPhase {
    /// Absolute time the phase starts.
    pub t: f64,
    pub color: LightColor,
    #[serde(default)]
    pub blink: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LightSchedule {
    pub id: String,
    /// Lane the light controls.
    pub lane: String,
    pub phases: Vec<LightPhase>,
}

impl LightSchedule {
    /// Phase active at time `t`; the first phase also covers earlier times.
    pub fn at(&self, t: f64) -> LightPhase {
        let mut current = self.phases[0];
        for p in &self.phases {
            if p.t <= t + 1e-9 {
                current = *p;
            }
        }
        current
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NpcKind {
    Vehicle,
    Pedestrian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedPoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

/// Predicted path of a traffic participant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NpcPrediction {
    pub id: String,
    pub kind: NpcKind,
    /// Whether the participant has right of way over the ego. Vehicles
    /// default to no, pedestrians to yes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priority: Option<bool>,
    pub path: Vec<TimedPoint>,
}

impl NpcPrediction {
    pub fn has_priority(&self) -> bool {
        self.priority.unwrap_or(matches!(self.kind, NpcKind::Pedestrian))
    }

    /// Position at time `t`, holding the end points outside the path.
    pub fn position_at(&self, t: f64) -> Point {
        let path = &self.path;
        if path.len() == 1 || t <= path[0].t {
            return [path[0].x, path[0].y];
        }
        let last = path[path.len() - 1];
        if t >= last.t {
            return [last.x, last.y];
        }
        let i = path.windows(2).position(|w| t <= w[1].t).unwrap_or(0);
        let (a, b) = (path[i], path[i + 1]);
        let w = (t - a.t) / (b.t - a.t);
        [a.x + (b.x - a.x) * w, a.y + (b.y - a.y) * w]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Weather {
    #[serde(default)]
    pub fog: f64,
    #[serde(default)]
    pub snow: f64,
    #[serde(default)]
    pub rain: f64,
}

/// Distance used for `D(_)` once every matching artifact lies behind the ego.
pub const NO_ARTIFACT_DISTANCE: f64 = 1000.0;

pub fn default_pass_margin() -> f64 {
    5.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedEnvironment {
    pub map: MapData,
    /// Lane the ego follows; distances and offsets are measured along it.
    pub route_lane: String,
    #[serde(default)]
    pub npcs: Vec<NpcPrediction>,
    #[serde(default)]
    pub lights: Vec<LightSchedule>,
    #[serde(default)]
    pub weather: Weather,
    /// An artifact stays the target of `D(_)` until the ego is this far past
    /// it, so distances go slightly negative after crossing.
    #[serde(default = "default_pass_margin")]
    pub pass_margin: f64,
}

impl PredictedEnvironment {
    /// Light controlling the route lane, or the only light present.
    pub fn route_light(&self) -> Option<&LightSchedule> {
        self.lights
            .iter()
            .find(|l| l.lane == self.route_lane)
            .or_else(|| (self.lights.len() == 1).then(|| &self.lights[0]))
    }
}
