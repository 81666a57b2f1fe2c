//! Quantitative semantics: discrete and smooth robustness.
//!
//! Formulas are compiled against a trace's column layout and evaluated
//! bottom-up, each node only over the time range its parent needs.

mod compiled;
pub mod smooth;

pub use smooth::{softmax, softmax_weights, softmin, softmin_weights};

use crate::error::EvalError;
use crate::spec::{Formula, TRUE_ROBUSTNESS};
use crate::trace::Trace;
use compiled::{Compiled, Mode};

/// Default smoothness of the smooth operators.
pub const DEFAULT_SMOOTHNESS: f64 = 10.0;

/// Discrete robustness of `formula` on `trace` at step `t`.
pub fn rho(formula: &Formula, trace: &Trace, t: usize) -> Result<f64, EvalError> {
    Compiled::new(formula, trace)?.eval(trace, trace.len(), t, Mode::Discrete)
}

/// Smooth robustness with smoothness `a`.
pub fn rho_smooth(formula: &Formula, trace: &Trace, t: usize, a: f64) -> Result<f64, EvalError> {
    Compiled::new(formula, trace)?.eval(trace, trace.len(), t, Mode::Smooth(a))
}

/// Discrete robustness of the prefix ending at step `k`, at time 0.
pub fn rho_prefix(formula: &Formula, trace: &Trace, k: usize) -> Result<f64, EvalError> {
    check_step(trace, k)?;
    Compiled::new(formula, trace)?.eval(trace, k + 1, 0, Mode::Discrete)
}

/// Smooth robustness of the prefix ending at step `k`, at time 0.
pub fn rho_smooth_prefix(formula: &Formula, trace: &Trace, k: usize, a: f64) -> Result<f64, EvalError> {
    check_step(trace, k)?;
    Compiled::new(formula, trace)?.eval(trace, k + 1, 0, Mode::Smooth(a))
}

/// Discrete robustness of every prefix, `series[k] = ρ(φ, π^k)`.
pub fn prefix_series(formula: &Formula, trace: &Trace) -> Result<Vec<f64>, EvalError> {
    let c = Compiled::new(formula, trace)?;
    (1..=trace.len())
        .map(|len| c.eval(trace, len, 0, Mode::Discrete))
        .collect()
}

fn check_step(trace: &Trace, k: usize) -> Result<(), EvalError> {
    if k >= trace.len() {
        return Err(EvalError::TimeOutOfRange {
            time: k,
            len: trace.len(),
        });
    }
    Ok(())
}

/// Smallest `k` with `ρ(φ, π^k) < θ`, or `None` when `ρ(φ, π) ≥ θ`.
pub fn earliest_violation(formula: &Formula, trace: &Trace, theta: f64) -> Result<Option<usize>, EvalError> {
    earliest_below(formula, trace, theta, false)
}

/// Smallest `k` with `ρ(φ, π^k) ≤ θ`, or `None` when `ρ(φ, π) > θ`.
pub fn earliest_at_or_below(formula: &Formula, trace: &Trace, theta: f64) -> Result<Option<usize>, EvalError> {
    earliest_below(formula, trace, theta, true)
}

fn earliest_below(formula: &Formula, trace: &Trace, theta: f64, inclusive: bool) -> Result<Option<usize>, EvalError> {
    let c = Compiled::new(formula, trace)?;
    let hit = |v: f64| if inclusive { v <= theta } else { v < theta };
    if !hit(c.eval(trace, trace.len(), 0, Mode::Discrete)?) {
        return Ok(None);
    }
    for k in 0..trace.len() {
        if hit(c.eval(trace, k + 1, 0, Mode::Discrete)?) {
            return Ok(Some(k));
        }
    }
    Ok(Some(trace.len() - 1))
}

/// Upper bound on `|ρ̃ − ρ|` for traces of length `len`.
///
/// Each smooth aggregate over `m` inputs whose own error is at most `E`
/// stays within `E + ln(m)/a` of the exact aggregate.
pub fn smooth_error_bound(formula: &Formula, len: usize, dt: f64, a: f64) -> f64 {
    let ln = |m: usize| (m.max(1) as f64).ln() / a;
    let window = |lo: usize, hi: Option<usize>| -> usize {
        let span = hi.map(|h| h.saturating_sub(lo) + 1).unwrap_or(len);
        span.min(len).max(1)
    };
    match formula {
        Formula::True | Formula::False | Formula::Prop(_) => 0.0,
        Formula::Not(f) => smooth_error_bound(f, len, dt, a),
        Formula::And(fs) | Formula::Or(fs) => {
            fs.iter().map(|f| smooth_error_bound(f, len, dt, a)).fold(0.0, f64::max) + ln(fs.len())
        }
        Formula::Eventually(f, i) | Formula::Always(f, i) => {
            let (lo, hi) = i.steps(dt);
            smooth_error_bound(f, len, dt, a) + ln(window(lo, hi))
        }
        Formula::Until(f1, f2, i) => {
            let (lo, hi) = i.steps(dt);
            let inner_span = hi.map(|h| h + 1).unwrap_or(len).min(len);
            let inner = smooth_error_bound(f1, len, dt, a) + ln(inner_span);
            let pair = inner.max(smooth_error_bound(f2, len, dt, a)) + ln(2);
            pair + ln(window(lo, hi))
        }
    }
}

pub(crate) fn literal_value(formula: &Formula) -> Option<f64> {
    match formula {
        Formula::True => Some(TRUE_ROBUSTNESS),
        Formula::False => Some(-TRUE_ROBUSTNESS),
        _ => None,
    }
}
