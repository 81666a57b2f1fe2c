//! Kinematic driving world used to exercise runtime enforcement.

pub mod control;
pub mod planner;
pub mod run;
pub mod scenario;
pub mod sweep;
pub mod world;

pub use control::{ControllerConfig, Tracking};
pub use planner::{make_planner, PlanTiming, Planner};
pub use run::{run_scenario, EnforcementReport, ExecutedStep, RunConfig, Termination};
pub use scenario::{builtin_scenario, builtin_scenarios, Scenario, ScenarioSource, BUILTIN_SCENARIOS};
pub use sweep::{parse_thetas, scenario_formula, sweep, SweepConfig, SweepReport, SweepRow, ThetaSummary};
pub use world::{predict_environment, step_world, EgoCommand, HorizonError, PredictionNoise, WorldState};
