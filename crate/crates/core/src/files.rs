//! JSON file formats for trajectories and predicted environments.

use serde::{Deserialize, Serialize};

use crate::error::{LoadError, TraceError};
use crate::trace::{PlannedTrajectory, PredictedEnvironment, Waypoint};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct TrajectoryFile {
    schema: u32,
    /// Step of the waypoints. Non-uniform input is resampled to it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dt: Option<f64>,
    waypoints: Vec<Waypoint>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EnvironmentFile {
    schema: u32,
    #[serde(flatten)]
    env: PredictedEnvironment,
}

fn check_schema(found: u32) -> Result<(), LoadError> {
    if found == SCHEMA {
        Ok(())
    } else {
        Err(LoadError::Schema(found))
    }
}

pub fn parse_trajectory(text: &str) -> Result<PlannedTrajectory, LoadError> {
    let file: TrajectoryFile = serde_json::from_str(text)?;
    check_schema(file.schema)?;
    let invalid = |e: TraceError| LoadError::Invalid(e.to_string());
    match PlannedTrajectory::new(file.waypoints.clone(), file.dt) {
        Err(TraceError::NonUniformSpacing { .. }) if file.dt.is_some() => {
            PlannedTrajectory::resample(&file.waypoints, file.dt.unwrap_or_default()).map_err(invalid)
        }
        other => other.map_err(invalid),
    }
}

pub fn trajectory_to_json(trajectory: &PlannedTrajectory) -> String {
    let file = TrajectoryFile {
        schema: SCHEMA,
        dt: Some(trajectory.dt()),
        waypoints: trajectory.waypoints().to_vec(),
    };
    serde_json::to_string_pretty(&file).expect("trajectory serializes")
}

pub fn parse_environment(text: &str) -> Result<PredictedEnvironment, LoadError> {
    let file: EnvironmentFile = serde_json::from_str(text)?;
    check_schema(file.schema)?;
    if file.env.map.lane(&file.env.route_lane).is_none() {
        return Err(LoadError::Invalid(format!(
            "route lane `{}` is not in the map",
            file.env.route_lane
        )));
    }
    Ok(file.env)
}

pub fn environment_to_json(env: &PredictedEnvironment) -> String {
    let file = EnvironmentFile {
        schema: SCHEMA,
        env: env.clone(),
    };
    serde_json::to_string_pretty(&file).expect("environment serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trajectory_roundtrip_and_resample() {
        let text = r#"{"schema":1,"dt":1.0,"waypoints":[
            {"t":0,"x":0,"y":0,"speed":0,"acc":2},
            {"t":2,"x":0,"y":4,"speed":4,"acc":2}]}"#;
        let t = parse_trajectory(text).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.waypoints()[1].speed, 2.0);
        assert_eq!(parse_trajectory(&trajectory_to_json(&t)).unwrap(), t);
    }

    #[test]
    fn wrong_schema_rejected() {
        let text = r#"{"schema":7,"waypoints":[]}"#;
        assert!(matches!(parse_trajectory(text), Err(LoadError::Schema(7))));
        let env = r#"{"schema":1,"map":{"lanes":[]},"route_lane":"x"}"#;
        assert!(matches!(parse_environment(env), Err(LoadError::Invalid(_))));
    }
}
