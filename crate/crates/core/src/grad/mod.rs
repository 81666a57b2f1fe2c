//! Reverse-mode gradients of smooth robustness with respect to trace values.
//!
//! The forward pass records every intermediate robustness value on a tape in
//! the same order, and through the same aggregate functions, as the smooth
//! evaluator. The backward pass then accumulates adjoints from the root.

mod tape;
mod until;

pub use tape::{Op, Tape};
pub use until::{closed_form_until_partial, UntilOperand};

use std::collections::HashMap;

use crate::error::{EvalError, TraceError};
use crate::robustness::literal_value;
use crate::spec::Formula;
use crate::trace::{Trace, Value};

/// `∂ρ̃/∂π(signal, step)` for every signal of a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    signals: Vec<String>,
    /// Indexed `[signal][step]`.
    values: Vec<Vec<f64>>,
}

impl Gradient {
    pub fn signals(&self) -> &[String] {
        &self.signals
    }

    pub fn get(&self, signal: &str, step: usize) -> f64 {
        self.column(signal).and_then(|c| c.get(step).copied()).unwrap_or(0.0)
    }

    pub fn column(&self, signal: &str) -> Option<&[f64]> {
        let i = self.signals.iter().position(|s| s == signal)?;
        Some(&self.values[i])
    }

    /// Partial derivative of every signal at one step, in trace order.
    pub fn at_step(&self, step: usize) -> Vec<(&str, f64)> {
        self.signals
            .iter()
            .zip(&self.values)
            .map(|(s, col)| (s.as_str(), col.get(step).copied().unwrap_or(0.0)))
            .collect()
    }
}

/// Smooth robustness together with its gradient.
#[derive(Debug, Clone)]
pub struct SmoothGradient {
    pub value: f64,
    pub gradient: Gradient,
}

/// Records the smooth robustness of `formula` at step `t` on the first `len`
/// steps of `trace`.
pub fn forward_record(formula: &Formula, trace: &Trace, len: usize, t: usize, a: f64) -> Result<Tape, EvalError> {
    if t >= len || len > trace.len() {
        return Err(EvalError::TimeOutOfRange {
            time: t,
            len: len.min(trace.len()),
        });
    }
    let mut rec = Recorder {
        trace,
        last: len - 1,
        len,
        a,
        tape: Tape::new(a),
        memo: HashMap::new(),
        inputs: HashMap::new(),
    };
    let root = rec.record(formula, t)?;
    rec.tape.set_root(root);
    Ok(rec.tape)
}

/// Gradient of `ρ̃(φ, π, t)`.
pub fn gradient(formula: &Formula, trace: &Trace, t: usize, a: f64) -> Result<SmoothGradient, EvalError> {
    gradient_on(formula, trace, trace.len(), t, a)
}

/// Gradient of `ρ̃(φ, π^k, 0)`, the prefix ending at step `k`.
pub fn prefix_gradient(formula: &Formula, trace: &Trace, k: usize, a: f64) -> Result<SmoothGradient, EvalError> {
    gradient_on(formula, trace, k + 1, 0, a)
}

fn gradient_on(formula: &Formula, trace: &Trace, len: usize, t: usize, a: f64) -> Result<SmoothGradient, EvalError> {
    let tape = forward_record(formula, trace, len, t, a)?;
    let adjoints = tape.backward();
    let mut values = vec![vec![0.0; trace.len()]; trace.signals().len()];
    for (node, (col, step)) in tape.inputs() {
        values[col][step] += adjoints[node];
    }
    Ok(SmoothGradient {
        value: tape.value(),
        gradient: Gradient {
            signals: trace.signals().to_vec(),
            values,
        },
    })
}

struct Recorder<'t> {
    trace: &'t Trace,
    last: usize,
    len: usize,
    a: f64,
    tape: Tape,
    memo: HashMap<(*const Formula, usize), usize>,
    inputs: HashMap<(usize, usize), usize>,
}

impl Recorder<'_> {
    fn input(&mut self, col: usize, step: usize) -> Result<usize, EvalError> {
        if let Some(id) = self.inputs.get(&(col, step)) {
            return Ok(*id);
        }
        let v = match self.trace.column(col)[step] {
            Value::Num(v) => v,
            Value::Placeholder(_) => {
                return Err(EvalError::UnresolvedPlaceholder {
                    signal: self.trace.signals()[col].clone(),
                    step,
                })
            }
        };
        let id = self.tape.push_input(v, (col, step));
        self.inputs.insert((col, step), id);
        Ok(id)
    }

    fn window_end(&self, s: usize, hi: Option<usize>) -> usize {
        hi.map_or(self.last, |h| (s + h).min(self.last))
    }

    fn record(&mut self, f: &Formula, s: usize) -> Result<usize, EvalError> {
        let key = (f as *const Formula, s);
        if let Some(id) = self.memo.get(&key) {
            return Ok(*id);
        }
        let id = self.record_uncached(f, s)?;
        self.memo.insert(key, id);
        Ok(id)
    }

    fn record_uncached(&mut self, f: &Formula, s: usize) -> Result<usize, EvalError> {
        if let Some(v) = literal_value(f) {
            return Ok(self.tape.push(Op::Const, v));
        }
        let a = self.a;
        match f {
            Formula::True | Formula::False => unreachable!(),
            Formula::Prop(p) => {
                let mut terms = Vec::with_capacity(p.expr.terms.len());
                for (name, c) in &p.expr.terms {
                    let col = self
                        .trace
                        .signal_index(name)
                        .ok_or_else(|| TraceError::MissingSignal(name.clone()))?;
                    terms.push((self.input(col, s)?, *c));
                }
                Ok(self.tape.push_prop(terms, p.expr.constant, p.op))
            }
            Formula::Not(g) => {
                let c = self.record(g, s)?;
                Ok(self.tape.push_neg(c))
            }
            Formula::And(gs) | Formula::Or(gs) => {
                let ids = gs.iter().map(|g| self.record(g, s)).collect::<Result<Vec<_>, _>>()?;
                Ok(if matches!(f, Formula::And(_)) {
                    self.tape.push_softmin(ids, a)
                } else {
                    self.tape.push_softmax(ids, a)
                })
            }
            Formula::Eventually(g, i) | Formula::Always(g, i) => {
                let (lo, hi) = i.steps(self.trace.dt());
                if s + lo > self.last {
                    return Err(EvalError::HorizonTooShort { time: s, len: self.len });
                }
                let ids = (s + lo..=self.window_end(s, hi))
                    .map(|u| self.record(g, u))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(if matches!(f, Formula::Always(..)) {
                    self.tape.push_softmin(ids, a)
                } else {
                    self.tape.push_softmax(ids, a)
                })
            }
            Formula::Until(l, r, i) => {
                let (lo, hi) = i.steps(self.trace.dt());
                if s + lo > self.last {
                    return Err(EvalError::HorizonTooShort { time: s, len: self.len });
                }
                let we = self.window_end(s, hi);
                let lhs = (s..=we).map(|u| self.record(l, u)).collect::<Result<Vec<_>, _>>()?;
                let mut cands = Vec::new();
                for t1 in s + lo..=we {
                    let inner = self.tape.push_softmin(lhs[..=t1 - s].to_vec(), a);
                    let rhs = self.record(r, t1)?;
                    cands.push(self.tape.push_softmin(vec![rhs, inner], a));
                }
                Ok(self.tape.push_softmax(cands, a))
            }
        }
    }
}

#[cfg(test)]
mod tests;
