//! Scenario descriptions and the built-in scenario set.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, LoadError};
use crate::files::SCHEMA;
use crate::trace::{
    Junction, Lane, LightColor, LightPhase, LightSchedule, MapData, NpcKind, PlannedTrajectory, Point, Stopline,
    TimedPoint, Weather,
};

/// How a scripted participant moves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "motion", rename_all = "snake_case")]
pub enum NpcMotion {
    /// Piecewise-linear path; the end points are held outside it.
    Path {
        path: Vec<TimedPoint>,
    },
    ConstantVelocity {
        start: Point,
        velocity: [f64; 2],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NpcScript {
    pub id: String,
    pub kind: NpcKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priority: Option<bool>,
    #[serde(flatten)]
    pub motion: NpcMotion,
}

impl NpcScript {
    pub fn position_at(&self, t: f64) -> Point {
        match &self.motion {
            NpcMotion::ConstantVelocity { start, velocity } => [start[0] + velocity[0] * t, start[1] + velocity[1] * t],
            NpcMotion::Path { path } => {
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
    }

    pub fn velocity_at(&self, t: f64) -> [f64; 2] {
        let h = 0.05;
        let (a, b) = (self.position_at(t - h), self.position_at(t + h));
        [(b[0] - a[0]) / (2.0 * h), (b[1] - a[1]) / (2.0 * h)]
    }
}

/// Initial ego state in route coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EgoStart {
    pub s: f64,
    #[serde(default)]
    pub d: f64,
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlannerSpec {
    /// Holds a target speed and lateral offset; ignores lights and laws.
    Cruise {
        speed: f64,
        #[serde(default)]
        lateral_offset: f64,
    },
    /// Cruise that stops at the line when the light will not be green.
    Lawful { speed: f64 },
    /// Emits the listed trajectories in turn, shifted to the current time.
    Replay { trajectories: Vec<PlannedTrajectory> },
}

/// Everything needed to simulate one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    /// Formula checked on this scenario unless the caller picks another.
    pub formula: String,
    pub map: MapData,
    pub route_lane: String,
    pub ego: EgoStart,
    /// Arc length along the route at which the run ends.
    pub destination_s: f64,
    #[serde(default)]
    pub npcs: Vec<NpcScript>,
    #[serde(default)]
    pub lights: Vec<LightSchedule>,
    #[serde(default)]
    pub weather: Weather,
    pub time_limit: f64,
    pub planner: PlannerSpec,
}

/// Scripts are defined this long past the time limit, to cover planning
/// horizons near the end of a run.
pub const SCRIPT_MARGIN: f64 = 30.0;

impl Scenario {
    pub fn route(&self) -> &Lane {
        self.map.lane(&self.route_lane).expect("route lane checked at load")
    }

    /// Last time the scripts describe.
    pub fn script_end(&self) -> f64 {
        self.time_limit + SCRIPT_MARGIN
    }

    pub fn validate(&self) -> Result<(), LoadError> {
        if self.map.lane(&self.route_lane).is_none() {
            return Err(LoadError::Invalid(format!(
                "route lane `{}` is not in the map",
                self.route_lane
            )));
        }
        if !(self.time_limit > 0.0) {
            return Err(LoadError::Invalid("time_limit must be positive".into()));
        }
        for l in &self.lights {
            if l.phases.is_empty() {
                return Err(LoadError::Invalid(format!("light `{}` has no phases", l.id)));
            }
        }
        for n in &self.npcs {
            if let NpcMotion::Path { path } = &n.motion {
                if path.is_empty() {
                    return Err(LoadError::Invalid(format!("npc `{}` has an empty path", n.id)));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Scenario, LoadError> {
        #[derive(Deserialize)]
        struct File {
            schema: u32,
            #[serde(flatten)]
            scenario: Scenario,
        }
        let file: File = serde_json::from_str(text)?;
        if file.schema != SCHEMA {
            return Err(LoadError::Schema(file.schema));
        }
        file.scenario.validate()?;
        Ok(file.scenario)
    }

    pub fn to_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("scenario serializes");
        v.as_object_mut()
            .expect("object")
            .insert("schema".into(), serde_json::json!(SCHEMA));
        serde_json::to_string_pretty(&v).expect("scenario serializes")
    }
}

/// Where a run's scenario comes from: a built-in generator, which draws its
/// parameters from the seed, or a fixed scenario.
#[derive(Debug, Clone)]
pub enum ScenarioSource {
    Builtin(&'static str),
    Fixed(Box<Scenario>),
}

impl ScenarioSource {
    pub fn name(&self) -> &str {
        match self {
            ScenarioSource::Builtin(n) => n,
            ScenarioSource::Fixed(s) => &s.name,
        }
    }

    pub fn instantiate(&self, seed: u64) -> Result<Scenario, Error> {
        match self {
            ScenarioSource::Builtin(n) => builtin_scenario(n, seed),
            ScenarioSource::Fixed(s) => Ok((**s).clone()),
        }
    }

    /// A built-in name or the path of a scenario file.
    pub fn parse(arg: &str) -> Result<ScenarioSource, Error> {
        if let Some(name) = BUILTIN_SCENARIOS.iter().find(|n| **n == arg) {
            return Ok(ScenarioSource::Builtin(name));
        }
        if std::path::Path::new(arg).exists() {
            let text = std::fs::read_to_string(arg)?;
            return Ok(ScenarioSource::Fixed(Box::new(Scenario::from_json(&text)?)));
        }
        Err(Error::UnknownScenario(arg.to_string()))
    }
}

pub const BUILTIN_SCENARIOS: [&str; 4] = ["red-light", "speed-limit", "lane-keep", "fog"];

pub fn builtin_scenario(name: &str, seed: u64) -> Result<Scenario, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(match name {
        "red-light" => red_light(&mut rng),
        "speed-limit" => speed_limit(&mut rng),
        "lane-keep" => lane_keep(&mut rng),
        "fog" => fog(&mut rng),
        other => return Err(Error::UnknownScenario(other.to_string())),
    })
}

/// One instance of every built-in scenario.
pub fn builtin_scenarios(seed: u64) -> Vec<Scenario> {
    BUILTIN_SCENARIOS
        .iter()
        .map(|n| builtin_scenario(n, seed).expect("built-in"))
        .collect()
}

const LANE_WIDTH: f64 = 3.5;

/// Two parallel northbound lanes; the route is the right one at x = 0.
fn two_lane_road(length: f64) -> MapData {
    MapData {
        lanes: vec![
            Lane {
                id: "main".into(),
                points: vec![[0.0, -20.0], [0.0, length]],
                width: LANE_WIDTH,
            },
            Lane {
                id: "left".into(),
                points: vec![[-LANE_WIDTH, -20.0], [-LANE_WIDTH, length]],
                width: LANE_WIDTH,
            },
        ],
        stoplines: vec![],
        junctions: vec![],
    }
}

fn parked(id: &str, x: f64, y: f64) -> NpcScript {
    NpcScript {
        id: id.into(),
        kind: NpcKind::Vehicle,
        priority: None,
        motion: NpcMotion::Path {
            path: vec![TimedPoint { t: 0.0, x, y }],
        },
    }
}

/// Signalised junction 100 m ahead. The light turns red before the ego can
/// reach the line at cruise speed and stays red for a while.
fn red_light(rng: &mut ChaCha8Rng) -> Scenario {
    let line = 100.0;
    let mut map = two_lane_road(300.0);
    map.lanes.push(Lane {
        id: "cross".into(),
        points: vec![[-150.0, 112.0], [150.0, 112.0]],
        width: LANE_WIDTH,
    });
    map.stoplines.push(Stopline {
        id: "stop-main".into(),
        a: [-LANE_WIDTH / 2.0, line],
        b: [LANE_WIDTH / 2.0, line],
    });
    map.junctions.push(Junction {
        id: "j-main".into(),
        polygon: vec![[-12.0, line + 2.0], [12.0, line + 2.0], [12.0, 124.0], [-12.0, 124.0]],
    });
    let green_end = rng.gen_range(1.0..4.0);
    let red_start = green_end + 3.0;
    let red_end = red_start + rng.gen_range(10.0..14.0);
    let cross_start = rng.gen_range(red_start + 0.5..red_start + 2.0);
    Scenario {
        name: "red-light".into(),
        formula: "law38".into(),
        map,
        route_lane: "main".into(),
        ego: EgoStart {
            s: 20.0 + rng.gen_range(-2.0..2.0),
            d: 0.0,
            speed: 8.0 + rng.gen_range(-0.5..0.5),
        },
        destination_s: 180.0,
        npcs: vec![
            parked("parked-car", -LANE_WIDTH, 60.0 + rng.gen_range(-10.0..10.0)),
            NpcScript {
                id: "cross-car".into(),
                kind: NpcKind::Vehicle,
                priority: None,
                motion: NpcMotion::Path {
                    path: vec![
                        TimedPoint {
                            t: 0.0,
                            x: -60.0,
                            y: 112.0,
                        },
                        TimedPoint {
                            t: cross_start,
                            x: -60.0,
                            y: 112.0,
                        },
                        TimedPoint {
                            t: cross_start + 8.0,
                            x: 60.0,
                            y: 112.0,
                        },
                    ],
                },
            },
        ],
        lights: vec![LightSchedule {
            id: "TL-main".into(),
            lane: "main".into(),
            phases: vec![
                LightPhase {
                    t: 0.0,
                    color: LightColor::Green,
                    blink: false,
                },
                LightPhase {
                    t: green_end,
                    color: LightColor::Yellow,
                    blink: false,
                },
                LightPhase {
                    t: red_start,
                    color: LightColor::Red,
                    blink: false,
                },
                LightPhase {
                    t: red_end,
                    color: LightColor::Green,
                    blink: false,
                },
            ],
        }],
        weather: Weather::default(),
        time_limit: 45.0,
        planner: PlannerSpec::Cruise {
            speed: 8.0,
            lateral_offset: 0.0,
        },
    }
}

/// Urban road with a 60 km/h limit; the planner cruises above it.
fn speed_limit(rng: &mut ChaCha8Rng) -> Scenario {
    Scenario {
        name: "speed-limit".into(),
        formula: "law46_sub2".into(),
        map: two_lane_road(500.0),
        route_lane: "main".into(),
        ego: EgoStart {
            s: 20.0,
            d: 0.0,
            speed: rng.gen_range(13.0..16.0),
        },
        destination_s: 300.0,
        npcs: vec![parked("parked-car", -LANE_WIDTH, rng.gen_range(80.0..160.0))],
        lights: vec![],
        weather: Weather::default(),
        time_limit: 40.0,
        planner: PlannerSpec::Cruise {
            speed: rng.gen_range(19.0..20.5),
            lateral_offset: 0.0,
        },
    }
}

/// The planner drifts toward the neighbouring lane.
fn lane_keep(rng: &mut ChaCha8Rng) -> Scenario {
    Scenario {
        name: "lane-keep".into(),
        formula: "law44".into(),
        map: two_lane_road(400.0),
        route_lane: "main".into(),
        ego: EgoStart {
            s: 20.0,
            d: 0.0,
            speed: 10.0,
        },
        destination_s: 220.0,
        npcs: vec![],
        lights: vec![],
        weather: Weather::default(),
        time_limit: 40.0,
        planner: PlannerSpec::Cruise {
            speed: 10.0 + rng.gen_range(0.0..2.0),
            lateral_offset: rng.gen_range(1.6..2.4),
        },
    }
}

/// Thick fog; the planner leaves every light switch off.
fn fog(rng: &mut ChaCha8Rng) -> Scenario {
    Scenario {
        name: "fog".into(),
        formula: "law58_sub3".into(),
        map: two_lane_road(300.0),
        route_lane: "main".into(),
        ego: EgoStart {
            s: 20.0,
            d: 0.0,
            speed: 8.0,
        },
        destination_s: 150.0,
        npcs: vec![],
        lights: vec![],
        weather: Weather {
            fog: rng.gen_range(0.5..0.9),
            snow: 0.0,
            rain: 0.0,
        },
        time_limit: 40.0,
        planner: PlannerSpec::Cruise {
            speed: 8.0,
            lateral_offset: 0.0,
        },
    }
}
