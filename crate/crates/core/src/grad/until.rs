//! Explicit partial derivatives of smooth Until with respect to its
//! operands, written out as sums of softmax and softmin weights. Used as a
//! check on the tape.

use crate::error::EvalError;
use crate::robustness::rho_smooth;
use crate::robustness::smooth::{softmax_weights, softmin, softmin_weights};
use crate::spec::{Formula, Interval};
use crate::trace::Trace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UntilOperand {
    Left,
    Right,
}

/// `∂ρ̃(lhs U_I rhs, π, t) / ∂ρ̃(operand, π, at)`.
///
/// With window `W = (t + I) ∩ [0, |π| − 1]`, the value is a softmax over
/// `t1 ∈ W` of `softmin(ρ̃(rhs, t1), softmin_{t2 ∈ [t, t1]} ρ̃(lhs, t2))`.
/// For `Right`, `at` must lie in `W`; for `Left`, anywhere from `t` to the
/// end of `W`, since the left operand counts from `t` on.
#[allow(clippy::too_many_arguments)]
pub fn closed_form_until_partial(
    lhs: &Formula,
    rhs: &Formula,
    interval: Interval,
    trace: &Trace,
    t: usize,
    at: usize,
    operand: UntilOperand,
    a: f64,
) -> Result<f64, EvalError> {
    let last = trace
        .len()
        .checked_sub(1)
        .ok_or(EvalError::TimeOutOfRange { time: t, len: 0 })?;
    if t > last {
        return Err(EvalError::TimeOutOfRange {
            time: t,
            len: trace.len(),
        });
    }
    let (lo, hi) = interval.steps(trace.dt());
    let start = t + lo;
    if start > last {
        return Err(EvalError::HorizonTooShort {
            time: t,
            len: trace.len(),
        });
    }
    let end = hi.map_or(last, |h| (t + h).min(last));
    let first = match operand {
        UntilOperand::Left => t,
        UntilOperand::Right => start,
    };
    if at < first || at > end {
        return Err(EvalError::OutsideWindow {
            time: at,
            start: first,
            end,
        });
    }

    let left: Vec<f64> = (t..=end)
        .map(|u| rho_smooth(lhs, trace, u, a))
        .collect::<Result<_, _>>()?;
    let mut pairs = Vec::with_capacity(end - start + 1);
    for t1 in start..=end {
        let inner = softmin(&left[..=t1 - t], a);
        pairs.push([rho_smooth(rhs, trace, t1, a)?, inner]);
    }
    let outer = softmax_weights(&pairs.iter().map(|p| softmin(p, a)).collect::<Vec<_>>(), a);

    let mut total = 0.0;
    for (j, t1) in (start..=end).enumerate() {
        let pair = softmin_weights(&pairs[j], a);
        match operand {
            UntilOperand::Right if t1 == at => total += outer[j] * pair[0],
            UntilOperand::Left if t1 >= at => {
                let inner = softmin_weights(&left[..=t1 - t], a);
                total += outer[j] * pair[1] * inner[at - t];
            }
            _ => {}
        }
    }
    Ok(total)
}
