//! Trajectories, the predicted environment, and signal traces built from them.

pub mod build;
pub mod environment;
pub mod map;
pub mod placeholder;
pub mod signal_trace;
pub mod trajectory;

pub use build::{build_trace, build_trace_for, direction_code, Commands, SignalContext, Switches, STEER_DEADBAND};
pub use environment::{
    LightColor, LightPhase, LightSchedule, NpcKind, NpcPrediction, PredictedEnvironment, TimedPoint, Weather,
    NO_ARTIFACT_DISTANCE,
};
pub use map::{Frenet, Junction, Lane, MapData, Point, Stopline};
pub use placeholder::resolve_placeholders;
pub use signal_trace::{Assignment, Trace, Value};
pub use trajectory::{Gear, PlannedTrajectory, Waypoint};
