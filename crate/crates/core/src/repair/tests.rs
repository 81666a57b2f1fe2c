use super::*;
use crate::grad::gradient;
use crate::spec::parse_formula;
use crate::trace::{Lane, LightColor, LightPhase, LightSchedule, MapData, Stopline, Weather};

fn straight_env() -> PredictedEnvironment {
    PredictedEnvironment {
        map: MapData {
            lanes: vec![Lane {
                id: "main".into(),
                points: vec![[0.0, -100.0], [0.0, 200.0]],
                width: 3.5,
            }],
            stoplines: vec![Stopline {
                id: "SL-0".into(),
                a: [-2.0, 44.0],
                b: [2.0, 44.0],
            }],
            junctions: vec![],
        },
        route_lane: "main".into(),
        npcs: vec![],
        lights: vec![LightSchedule {
            id: "TL-0".into(),
            lane: "main".into(),
            phases: vec![LightPhase {
                t: 0.0,
                color: LightColor::Red,
                blink: false,
            }],
        }],
        weather: Weather::default(),
        pass_margin: 5.0,
    }
}

fn wp(t: f64, y: f64, speed: f64) -> Waypoint {
    Waypoint {
        t,
        x: 0.0,
        y,
        speed,
        acc: 0.0,
        steer: 0.0,
        gear: Gear::Drive,
    }
}

#[test]
fn tied_distances_prefer_stopline() {
    let reg = SignalRegistry::standard();
    let f = parse_formula("D(junction) > 3 || D(stopline) > 3", &reg).unwrap();
    let t = Trace::from_numeric(1.0, vec![("D(junction)", vec![1.0]), ("D(stopline)", vec![1.0])]).unwrap();
    let g = gradient(&f, &t, 0, 10.0).unwrap();
    let s = select_signal(&g.gradient, 0, &reg, 1e-12).unwrap();
    assert_eq!(s.signal, "D(stopline)");
    assert_eq!(s.gradient, 0.5);
}

#[test]
fn single_candidate_and_empty() {
    let reg = SignalRegistry::standard();
    let f = parse_formula("-0.3 * speed + fog > 0", &reg).unwrap();
    let t = Trace::from_numeric(1.0, vec![("fog", vec![0.0]), ("speed", vec![1.0])]).unwrap();
    let g = gradient(&f, &t, 0, 10.0).unwrap();
    let s = select_signal(&g.gradient, 0, &reg, 1e-12).unwrap();
    assert_eq!((s.signal.as_str(), s.gradient), ("speed", -0.3));

    let f = parse_formula("fog > 0.5", &reg).unwrap();
    let g = gradient(&f, &t, 0, 10.0).unwrap();
    assert_eq!(
        select_signal(&g.gradient, 0, &reg, 1e-12),
        Err(RepairError::NoControllableSignal { step: 0 })
    );
}

#[test]
fn overshoot_is_halved() {
    let reg = SignalRegistry::standard();
    let f = parse_formula("speed > 10 && speed < 100", &reg).unwrap();
    let t = Trace::from_numeric(1.0, vec![("speed", vec![8.0])]).unwrap();
    let config = RepairConfig::with_theta(95.0);
    let g = gradient(&f, &t, 0, 10.0).unwrap();
    let grad = g.gradient.get("speed", 0);
    let h = magnitude(&f, &t, "speed", 0, grad, &config).unwrap();
    let first = initial_delta(95.0, -2.0, grad, 1e-3);
    assert!(8.0 + first > 100.0 + 2.0, "first step overshoots");
    assert!(h.halvings >= 1);
    assert_eq!(h.delta, first / 2f64.powi(h.halvings as i32));
    assert!(h.value > g.value);
}

#[test]
fn speed_edit_touches_one_waypoint() {
    let env = straight_env();
    let reg = SignalRegistry::standard();
    let ctx = SignalContext::new(&env, &reg).unwrap();
    let traj = PlannedTrajectory::new(vec![wp(0.0, 0.0, 5.0), wp(1.0, 5.0, 5.0), wp(2.0, 10.0, 5.0)], None).unwrap();
    let (out, edit) = apply_repair(&traj, &ctx, "speed", 1, 2.0, &RepairConfig::default()).unwrap();
    assert_eq!(edit, Edit::Speed { from: 5.0, to: 7.0 });
    assert_eq!(out.waypoints()[1].speed, 7.0);
    assert_eq!(out.waypoints()[0], traj.waypoints()[0]);
    assert_eq!(out.waypoints()[2], traj.waypoints()[2]);
    assert_eq!(edit.positional_difference(1.0), 2.0);

    let (out, _) = apply_repair(&traj, &ctx, "speed", 2, -9.0, &RepairConfig::default()).unwrap();
    assert_eq!(out.waypoints()[2].speed, 0.0);
}

#[test]
fn direction_snaps_to_nearest_code() {
    let env = straight_env();
    let reg = SignalRegistry::standard();
    let ctx = SignalContext::new(&env, &reg).unwrap();
    let traj = PlannedTrajectory::new(vec![wp(0.0, 0.0, 5.0), wp(1.0, 5.0, 5.0)], None).unwrap();
    let (out, edit) = apply_repair(&traj, &ctx, "direction", 0, 0.9, &RepairConfig::default()).unwrap();
    assert_eq!(out.waypoints()[0].steer, 0.1);
    assert_eq!(edit.positional_difference(1.0), 0.0);
    assert!(matches!(
        apply_repair(&traj, &ctx, "direction", 0, 0.2, &RepairConfig::default()),
        Err(RepairError::Infeasible { .. })
    ));
}

#[test]
fn distance_edit_moves_back_along_lane() {
    let env = straight_env();
    let reg = SignalRegistry::standard();
    let ctx = SignalContext::new(&env, &reg).unwrap();
    let traj = PlannedTrajectory::new(vec![wp(0.0, 30.0, 5.0), wp(2.0, 35.85, 5.0)], None).unwrap();
    let (out, edit) = apply_repair(&traj, &ctx, "D(stopline)", 1, 7.7, &RepairConfig::default()).unwrap();
    let p = out.waypoints()[1].position();
    assert!(p[0].abs() < 1e-9 && (p[1] - 28.15).abs() < 0.05 / 2.0, "{p:?}");
    assert!((edit.positional_difference(2.0) - 7.7).abs() < 0.05);
}

#[test]
fn lane_edit_stays_on_road() {
    let env = straight_env();
    let reg = SignalRegistry::standard();
    let ctx = SignalContext::new(&env, &reg).unwrap();
    let traj = PlannedTrajectory::new(vec![wp(0.0, 0.0, 5.0)], Some(1.0)).unwrap();
    // Target far outside the single lane: stop at its edge.
    let (out, _) = apply_repair(&traj, &ctx, "Lane(route)", 0, 5.0, &RepairConfig::default()).unwrap();
    let x = out.waypoints()[0].x;
    assert!((x + 1.75).abs() < 1e-9, "{x}");
}

#[test]
fn satisfied_trajectory_is_left_alone() {
    let env = straight_env();
    let reg = SignalRegistry::standard();
    let f = parse_formula("G (speed < 20)", &reg).unwrap();
    let traj = PlannedTrajectory::new(vec![wp(0.0, 0.0, 5.0), wp(1.0, 5.0, 5.0)], None).unwrap();
    let a = Assignment {
        slots: vec![],
        values: vec![vec![]; 2],
    };
    assert!(
        repair_trajectory(&f, &traj, &env, &reg, &a, &RepairConfig::with_theta(1.0))
            .unwrap()
            .is_none()
    );
    let out = repair_trajectory(&f, &traj, &env, &reg, &a, &RepairConfig::with_theta(16.0))
        .unwrap()
        .unwrap();
    assert_eq!(out.action.signal(), "speed");
    assert!(out.action.smooth_after > out.action.smooth_before);
    assert!(out.action.rho_after > out.action.rho_before);
}
