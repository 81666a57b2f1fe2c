//! Inputs shared by the benchmarks in `benches/`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stle_core::sim::{builtin_scenario, make_planner, predict_environment, PlanTiming, PredictionNoise, WorldState};
use stle_core::spec::{parse_spec, SignalRegistry, Specification, DRIVING_LAWS};
use stle_core::trace::{PlannedTrajectory, PredictedEnvironment};

/// The first plan of a red-light run in fog, with its predicted environment.
pub struct Tick {
    pub registry: SignalRegistry,
    pub spec: Specification,
    pub plan: PlannedTrajectory,
    pub env: PredictedEnvironment,
}

/// A tick whose plan has `waypoints` points over an 8 s horizon.
pub fn red_light_tick(seed: u64, waypoints: usize) -> Tick {
    let registry = SignalRegistry::standard();
    let spec = parse_spec(DRIVING_LAWS, &registry).expect("built-in laws parse");
    let mut scenario = builtin_scenario("red-light", seed).expect("built-in scenario");
    scenario.weather.fog = 0.6;
    let dt = 8.0 / waypoints as f64;
    let timing = PlanTiming {
        horizon: dt * (waypoints - 1) as f64,
        dt,
    };
    let state = WorldState::initial(&scenario);
    let plan = make_planner(&scenario.planner).plan(&scenario, &state, timing);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let env = predict_environment(
        &scenario,
        &state,
        timing.horizon,
        dt,
        PredictionNoise::default(),
        &mut rng,
    )
    .expect("scripts cover the horizon");
    Tick {
        registry,
        spec,
        plan,
        env,
    }
}
