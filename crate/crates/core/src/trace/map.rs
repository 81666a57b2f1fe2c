//! Road geometry: lane polylines, stoplines and junction polygons.

use serde::{Deserialize, Serialize};

pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lane {
    pub id: String,
    /// Centerline, in driving direction.
    pub points: Vec<Point>,
    #[serde(default = "default_lane_width")]
    pub width: f64,
}

pub fn default_lane_width() -> f64 {
    3.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stopline {
    pub id: String,
    pub a: Point,
    pub b: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Junction {
    pub id: String,
    pub polygon: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MapData {
    pub lanes: Vec<Lane>,
    #[serde(default)]
    pub stoplines: Vec<Stopline>,
    #[serde(default)]
    pub junctions: Vec<Junction>,
}

/// Projection of a point onto a lane: arc length and signed lateral offset
/// (left of the driving direction is positive).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frenet {
    pub s: f64,
    pub d: f64,
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

pub fn distance(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

/// Parameter `u` along `p→q` where it meets segment `a→b`, if it does.
fn segment_hit(p: Point, q: Point, a: Point, b: Point) -> Option<f64> {
    let r = sub(q, p);
    let s = sub(b, a);
    let denom = cross(r, s);
    if denom.abs() < 1e-12 {
        return None;
    }
    let ap = sub(a, p);
    let u = cross(ap, s) / denom;
    let v = cross(ap, r) / denom;
    let eps = 1e-12;
    ((-eps..=1.0 + eps).contains(&u) && (-eps..=1.0 + eps).contains(&v)).then_some(u.clamp(0.0, 1.0))
}

impl Lane {
    fn cumulative(&self) -> Vec<f64> {
        let mut acc = Vec::with_capacity(self.points.len());
        let mut s = 0.0;
        acc.push(0.0);
        for w in self.points.windows(2) {
            s += distance(w[0], w[1]);
            acc.push(s);
        }
        acc
    }

    pub fn length(&self) -> f64 {
        self.cumulative().last().copied().unwrap_or(0.0)
    }

    /// Nearest-point projection. Points beyond either end are projected onto
    /// the extension of the end segment, so `s` may leave `[0, length]`.
    pub fn project(&self, p: Point) -> Frenet {
        if self.points.len() < 2 {
            let d = self.points.first().map(|a| distance(*a, p)).unwrap_or(0.0);
            return Frenet { s: 0.0, d };
        }
        let cum = self.cumulative();
        let last = self.points.len() - 2;
        let mut best: Option<(f64, Frenet)> = None;
        for (i, w) in self.points.windows(2).enumerate() {
            let seg = sub(w[1], w[0]);
            let len = norm(seg);
            if len == 0.0 {
                continue;
            }
            let mut u = dot(sub(p, w[0]), seg) / (len * len);
            if i > 0 {
                u = u.max(0.0);
            }
            if i < last {
                u = u.min(1.0);
            }
            let foot = [w[0][0] + u * seg[0], w[0][1] + u * seg[1]];
            let gap = distance(foot, p);
            let side = cross(seg, sub(p, foot));
            let d = if side < 0.0 { -gap } else { gap };
            let f = Frenet { s: cum[i] + u * len, d };
            if best.map_or(true, |(g, _)| gap < g - 1e-12) {
                best = Some((gap, f));
            }
        }
        best.map(|(_, f)| f).unwrap_or(Frenet { s: 0.0, d: 0.0 })
    }

    /// World point at arc length `s` and lateral offset `d`.
    pub fn point_at(&self, s: f64, d: f64) -> Point {
        if self.points.len() < 2 {
            return self.points.first().copied().unwrap_or([0.0, 0.0]);
        }
        let cum = self.cumulative();
        let n = self.points.len();
        let mut i = 0;
        while i + 2 < n && cum[i + 1] < s {
            i += 1;
        }
        let (a, b) = (self.points[i], self.points[i + 1]);
        let seg = sub(b, a);
        let len = norm(seg);
        let u = (s - cum[i]) / len;
        let tangent = [seg[0] / len, seg[1] / len];
        let left = [-tangent[1], tangent[0]];
        [a[0] + u * seg[0] + d * left[0], a[1] + u * seg[1] + d * left[1]]
    }

    /// Heading (radians) of the centerline at arc length `s`.
    pub fn heading_at(&self, s: f64) -> f64 {
        if self.points.len() < 2 {
            return 0.0;
        }
        let cum = self.cumulative();
        let n = self.points.len();
        let mut i = 0;
        while i + 2 < n && cum[i + 1] < s {
            i += 1;
        }
        let seg = sub(self.points[i + 1], self.points[i]);
        seg[1].atan2(seg[0])
    }

    /// Arc lengths where the centerline meets the segment `a→b`.
    pub fn crossings(&self, a: Point, b: Point) -> Vec<f64> {
        let cum = self.cumulative();
        let mut out = Vec::new();
        for (i, w) in self.points.windows(2).enumerate() {
            if let Some(u) = segment_hit(w[0], w[1], a, b) {
                out.push(cum[i] + u * distance(w[0], w[1]));
            }
        }
        out
    }

    /// Arc length where the centerline first enters the polygon.
    pub fn entry(&self, polygon: &[Point]) -> Option<f64> {
        if polygon.len() < 3 || self.points.is_empty() {
            return None;
        }
        if point_in_polygon(self.points[0], polygon) {
            return Some(0.0);
        }
        let mut best: Option<f64> = None;
        for k in 0..polygon.len() {
            let (a, b) = (polygon[k], polygon[(k + 1) % polygon.len()]);
            for s in self.crossings(a, b) {
                best = Some(best.map_or(s, |v: f64| v.min(s)));
            }
        }
        best
    }
}

pub fn point_in_polygon(p: Point, polygon: &[Point]) -> bool {
    let mut inside = false;
    let n = polygon.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (polygon[i], polygon[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

impl MapData {
    pub fn lane(&self, id: &str) -> Option<&Lane> {
        self.lanes.iter().find(|l| l.id == id)
    }

    /// True if the point lies within some lane corridor.
    pub fn is_drivable(&self, p: Point) -> bool {
        self.lanes.iter().any(|lane| {
            let f = lane.project(p);
            let len = lane.length();
            f.d.abs() <= lane.width / 2.0 + 1e-9 && f.s >= -1e-9 && f.s <= len + 1e-9
        })
    }

    /// Arc lengths along `lane` of the artifacts named by `key`: `stopline`
    /// and `junction` select every artifact of that kind, anything else is
    /// matched against artifact ids.
    pub fn artifact_positions(&self, lane: &Lane, key: &str) -> Vec<f64> {
        let stop = |s: &Stopline| lane.crossings(s.a, s.b);
        let junc = |j: &Junction| lane.entry(&j.polygon).into_iter().collect::<Vec<_>>();
        let mut out: Vec<f64> = match key {
            "stopline" => self.stoplines.iter().flat_map(stop).collect(),
            "junction" => self.junctions.iter().flat_map(junc).collect(),
            id => self
                .stoplines
                .iter()
                .filter(|s| s.id == id)
                .flat_map(stop)
                .chain(self.junctions.iter().filter(|j| j.id == id).flat_map(junc))
                .collect(),
        };
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        out
    }
}
