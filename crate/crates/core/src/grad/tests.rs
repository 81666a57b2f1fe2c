use super::*;
use crate::robustness::rho_smooth;
use crate::robustness::tests::formula_strategy;
use crate::spec::{parse_formula, Interval, SignalRegistry, SignalSource, ValueKind};
use proptest::prelude::*;

fn reg() -> SignalRegistry {
    let mut r = SignalRegistry::standard();
    for name in ["x", "y"] {
        r.register(name, ValueKind::Numeric { unit: "" }, SignalSource::Trajectory, true);
    }
    r
}

fn trace_xy(xs: &[f64], ys: &[f64]) -> Trace {
    Trace::from_numeric(1.0, vec![("x", xs.to_vec()), ("y", ys.to_vec())]).unwrap()
}

#[test]
fn always_speed_gradient_by_hand() {
    let t = Trace::from_numeric(2.0, vec![("speed", vec![7.01, 6.13, 5.44, 5.09, 3.89])]).unwrap();
    let f = parse_formula("G (speed > 5)", &reg()).unwrap();
    let g = prefix_gradient(&f, &t, 3, 10.0).unwrap();
    let margins = [2.01, 1.13, 0.44, 0.09f64];
    let denom: f64 = margins.iter().map(|m| (-10.0 * m).exp()).sum();
    let expected = (-0.9f64).exp() / denom;
    assert!((g.gradient.get("speed", 3) - expected).abs() < 1e-12);
    assert!((g.gradient.get("speed", 3) - 0.9707).abs() < 1e-4);
    // Steps past the prefix do not contribute.
    assert_eq!(g.gradient.get("speed", 4), 0.0);
}

#[test]
fn linear_coefficients_scale_the_gradient() {
    let f = parse_formula("2*x - y < 3", &reg()).unwrap();
    let g = gradient(&f, &trace_xy(&[1.0], &[4.0]), 0, 10.0).unwrap();
    assert_eq!(g.gradient.get("x", 0), -2.0);
    assert_eq!(g.gradient.get("y", 0), 1.0);
    assert_eq!(g.value, 5.0);
}

#[test]
fn replay_reproduces_and_tracks_edits() {
    let f = parse_formula("G (x > 1) && F[0,2] (y < 0)", &reg()).unwrap();
    let t = trace_xy(&[3.0, 2.0, 4.0], &[1.0, -1.0, 2.0]);
    let tape = forward_record(&f, &t, 3, 0, 10.0).unwrap();
    assert_eq!(tape.replay(&HashMap::new()), tape.value());
    let mut over = HashMap::new();
    over.insert((0, 1), 5.0);
    let edited = {
        let mut e = t.clone();
        e.set(1, "x", Value::Num(5.0)).unwrap();
        e
    };
    assert_eq!(tape.replay(&over), rho_smooth(&f, &edited, 0, 10.0).unwrap());
}

fn weights(xs: &[f64], a: f64) -> Vec<f64> {
    let e: Vec<f64> = xs.iter().map(|x| (a * x).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

fn lse(xs: &[f64], a: f64) -> f64 {
    xs.iter().map(|x| (a * x).exp()).sum::<f64>().ln() / a
}

/// Partial derivatives of `(x > c1) U[lo,hi] (y > c2)` at time 0, written
/// out term by term from the chain rule.
fn until_by_chain_rule(xs: &[f64], ys: &[f64], c1: f64, c2: f64, lo: usize, hi: usize, a: f64) -> (Vec<f64>, Vec<f64>) {
    let n = xs.len();
    let r1: Vec<f64> = xs.iter().map(|x| x - c1).collect();
    let r2: Vec<f64> = ys.iter().map(|y| y - c2).collect();
    let end = hi.min(n - 1);
    let smin = |v: &[f64]| -lse(&v.iter().map(|x| -x).collect::<Vec<_>>(), a);
    let wmin = |v: &[f64]| weights(&v.iter().map(|x| -x).collect::<Vec<_>>(), a);
    let t1s: Vec<usize> = (lo..=end).collect();
    let inner: Vec<f64> = t1s.iter().map(|&t1| smin(&r1[..=t1])).collect();
    let pairs: Vec<f64> = t1s.iter().zip(&inner).map(|(&t1, i)| smin(&[r2[t1], *i])).collect();
    let w_outer = weights(&pairs, a);
    let mut dx = vec![0.0; n];
    let mut dy = vec![0.0; n];
    for (j, &t1) in t1s.iter().enumerate() {
        let wp = wmin(&[r2[t1], inner[j]]);
        dy[t1] += w_outer[j] * wp[0];
        let wi = wmin(&r1[..=t1]);
        // Every lhs step from the start of the window to t1 contributes.
        for t2 in 0..=t1 {
            dx[t2] += w_outer[j] * wp[1] * wi[t2];
        }
    }
    (dx, dy)
}

proptest! {
    #[test]
    fn tape_value_matches_smooth_evaluator(f in formula_strategy(), xs in proptest::collection::vec(-5.0f64..5.0, 6)) {
        let ys: Vec<f64> = xs.iter().rev().copied().collect();
        let t = trace_xy(&xs, &ys);
        if let Ok(v) = rho_smooth(&f, &t, 0, 10.0) {
            let g = gradient(&f, &t, 0, 10.0).unwrap();
            prop_assert!((g.value - v).abs() <= 1e-12 * (1.0 + v.abs()));
        } else {
            prop_assert!(gradient(&f, &t, 0, 10.0).is_err());
        }
    }

    #[test]
    fn matches_central_differences(
        f in formula_strategy(),
        xs in proptest::collection::vec(-5.0f64..5.0, 5),
        ys in proptest::collection::vec(-5.0f64..5.0, 5),
    ) {
        let t = trace_xy(&xs, &ys);
        let Ok(g) = gradient(&f, &t, 0, 10.0) else { return Ok(()) };
        let h = 1e-5;
        for (name, col) in [("x", 0usize), ("y", 1)] {
            for step in 0..t.len() {
                let base = t.numeric(step, name).unwrap();
                let mut up = t.clone();
                up.set(step, name, Value::Num(base + h)).unwrap();
                let mut down = t.clone();
                down.set(step, name, Value::Num(base - h)).unwrap();
                let fd = (rho_smooth(&f, &up, 0, 10.0).unwrap() - rho_smooth(&f, &down, 0, 10.0).unwrap()) / (2.0 * h);
                let an = g.gradient.get(name, step);
                prop_assert!((fd - an).abs() < 1e-4 * (1.0 + an.abs()), "{} {} col {}: fd {} vs {}", name, step, col, fd, an);
            }
        }
    }

    #[test]
    fn until_gradient_matches_chain_rule(
        xs in proptest::collection::vec(-3.0f64..3.0, 2..9),
        c1 in -1.0f64..1.0,
        c2 in -1.0f64..1.0,
        lo in 0usize..3,
        span in 0usize..4,
        a in 2.0f64..20.0,
    ) {
        let n = xs.len();
        prop_assume!(lo < n);
        let ys: Vec<f64> = xs.iter().enumerate().map(|(i, x)| x * 0.7 - i as f64 * 0.3).collect();
        let f = Formula::until(
            parse_formula(&format!("x > {c1}"), &reg()).unwrap(),
            parse_formula(&format!("y > {c2}"), &reg()).unwrap(),
            Interval::new(lo as f64, (lo + span) as f64),
        );
        let t = trace_xy(&xs, &ys);
        let g = gradient(&f, &t, 0, a).unwrap();
        let (dx, dy) = until_by_chain_rule(&xs, &ys, c1, c2, lo, lo + span, a);
        for k in 0..n {
            prop_assert!((g.gradient.get("x", k) - dx[k]).abs() < 1e-9, "x {}: {} vs {}", k, g.gradient.get("x", k), dx[k]);
            prop_assert!((g.gradient.get("y", k) - dy[k]).abs() < 1e-9, "y {}: {} vs {}", k, g.gradient.get("y", k), dy[k]);
        }
    }
}
