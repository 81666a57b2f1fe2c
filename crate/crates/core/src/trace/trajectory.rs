//! Planned trajectories: uniformly spaced waypoints.

use serde::{Deserialize, Serialize};

use crate::error::TraceError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "UPPERCASE")]
pub enum Gear {
    #[default]
    Drive,
    Reverse,
    Neutral,
    Park,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    /// Absolute time in seconds.
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub speed: f64,
    pub acc: f64,
    /// Signed steering fraction, left positive.
    #[serde(default)]
    pub steer: f64,
    #[serde(default)]
    pub gear: Gear,
}

impl Waypoint {
    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }
}

const SPACING_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedTrajectory {
    dt: f64,
    waypoints: Vec<Waypoint>,
}

impl PlannedTrajectory {
    /// Validates strictly increasing, uniformly spaced times. `dt` is
    /// inferred from the first gap when not given; a single waypoint needs it.
    pub fn new(waypoints: Vec<Waypoint>, dt: Option<f64>) -> Result<Self, TraceError> {
        if waypoints.is_empty() {
            return Err(TraceError::EmptyTrajectory);
        }
        for (i, pair) in waypoints.windows(2).enumerate() {
            if !(pair[1].t > pair[0].t) {
                return Err(TraceError::NonIncreasingTime { index: i + 1 });
            }
        }
        let dt = match (dt, waypoints.len()) {
            (Some(dt), _) => dt,
            (None, 1) => return Err(TraceError::InvalidStep(0.0)),
            (None, _) => waypoints[1].t - waypoints[0].t,
        };
        if !(dt.is_finite() && dt > 0.0) {
            return Err(TraceError::InvalidStep(dt));
        }
        for (i, pair) in waypoints.windows(2).enumerate() {
            let gap = pair[1].t - pair[0].t;
            if (gap - dt).abs() > SPACING_TOL * dt.max(1.0) {
                return Err(TraceError::NonUniformSpacing {
                    index: i + 1,
                    found: gap,
                    expected: dt,
                });
            }
        }
        Ok(PlannedTrajectory { dt, waypoints })
    }

    /// Resamples raw waypoints to a uniform grid starting at the first time.
    /// Position, speed, acceleration and steering are interpolated linearly;
    /// gear takes the nearest raw waypoint.
    pub fn resample(raw: &[Waypoint], dt: f64) -> Result<Self, TraceError> {
        if raw.is_empty() {
            return Err(TraceError::EmptyTrajectory);
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(TraceError::InvalidStep(dt));
        }
        for (i, pair) in raw.windows(2).enumerate() {
            if !(pair[1].t > pair[0].t) {
                return Err(TraceError::NonIncreasingTime { index: i + 1 });
            }
        }
        let t0 = raw[0].t;
        let t_end = raw[raw.len() - 1].t;
        let count = ((t_end - t0) / dt + 1e-9).floor() as usize + 1;
        let mut out = Vec::with_capacity(count);
        let mut seg = 0usize;
        for i in 0..count {
            let t = t0 + i as f64 * dt;
            while seg + 1 < raw.len() - 1 && raw[seg + 1].t <= t + 1e-9 {
                seg += 1;
            }
            out.push(interpolate(raw, seg, t));
        }
        PlannedTrajectory::new(out, Some(dt))
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn waypoints(&self) -> &[Waypoint] {
        &self.waypoints
    }

    pub fn get(&self, k: usize) -> Option<&Waypoint> {
        self.waypoints.get(k)
    }

    pub fn start_time(&self) -> f64 {
        self.waypoints[0].t
    }

    /// The prefix ending at step `k` (inclusive).
    pub fn prefix(&self, k: usize) -> Self {
        let end = (k + 1).min(self.waypoints.len());
        PlannedTrajectory {
            dt: self.dt,
            waypoints: self.waypoints[..end].to_vec(),
        }
    }

    /// Copy with waypoint `k` replaced. The time stamp is kept.
    pub fn with_waypoint(&self, k: usize, mut wp: Waypoint) -> Self {
        let mut out = self.clone();
        wp.t = out.waypoints[k].t;
        out.waypoints[k] = wp;
        out
    }

    /// Linear interpolation at time `t`, clamped to the ends.
    pub fn sample(&self, t: f64) -> Waypoint {
        let n = self.waypoints.len();
        if n == 1 || t <= self.waypoints[0].t {
            return Waypoint { t, ..self.waypoints[0] };
        }
        if t >= self.waypoints[n - 1].t {
            return Waypoint {
                t,
                ..self.waypoints[n - 1]
            };
        }
        let seg = (((t - self.waypoints[0].t) / self.dt).floor() as usize).min(n - 2);
        interpolate(&self.waypoints, seg, t)
    }
}

fn interpolate(raw: &[Waypoint], seg: usize, t: f64) -> Waypoint {
    let a = &raw[seg];
    if (t - a.t).abs() <= 1e-9 || raw.len() == 1 {
        return Waypoint { t, ..*a };
    }
    let b = &raw[(seg + 1).min(raw.len() - 1)];
    if (t - b.t).abs() <= 1e-9 {
        return Waypoint { t, ..*b };
    }
    let w = ((t - a.t) / (b.t - a.t)).clamp(0.0, 1.0);
    let lerp = |p: f64, q: f64| p + (q - p) * w;
    Waypoint {
        t,
        x: lerp(a.x, b.x),
        y: lerp(a.y, b.y),
        speed: lerp(a.speed, b.speed),
        acc: lerp(a.acc, b.acc),
        steer: lerp(a.steer, b.steer),
        gear: if w < 0.5 { a.gear } else { b.gear },
    }
}
