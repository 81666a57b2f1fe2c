//! Formula compiled against a trace layout.

use std::collections::VecDeque;

use super::literal_value;
use super::smooth::{softmax, softmin};
use crate::error::{EvalError, TraceError};
use crate::spec::{Comparison, Formula};
use crate::trace::{Trace, Value};

#[derive(Debug, Clone, Copy)]
pub(crate) enum Mode {
    Discrete,
    Smooth(f64),
}

#[derive(Debug, Clone)]
pub(crate) enum Node {
    Const(f64),
    Prop {
        terms: Vec<(usize, f64)>,
        constant: f64,
        op: Comparison,
    },
    Not(usize),
    And(Vec<usize>),
    Or(Vec<usize>),
    Until {
        lhs: usize,
        rhs: usize,
        lo: usize,
        hi: Option<usize>,
    },
    Eventually {
        child: usize,
        lo: usize,
        hi: Option<usize>,
    },
    Always {
        child: usize,
        lo: usize,
        hi: Option<usize>,
    },
}

/// Nodes in post-order: children always precede their parent, the root is
/// last.
pub(crate) struct Compiled {
    nodes: Vec<Node>,
    signals: Vec<String>,
}

impl Compiled {
    pub(crate) fn new(formula: &Formula, trace: &Trace) -> Result<Self, EvalError> {
        let mut c = Compiled {
            nodes: Vec::new(),
            signals: trace.signals().to_vec(),
        };
        c.push(formula, trace)?;
        Ok(c)
    }

    fn push(&mut self, f: &Formula, trace: &Trace) -> Result<usize, EvalError> {
        let dt = trace.dt();
        let node = if let Some(v) = literal_value(f) {
            Node::Const(v)
        } else {
            match f {
                Formula::True | Formula::False => unreachable!(),
                Formula::Prop(p) => {
                    let terms = p
                        .expr
                        .terms
                        .iter()
                        .map(|(name, c)| {
                            trace
                                .signal_index(name)
                                .map(|i| (i, *c))
                                .ok_or_else(|| TraceError::MissingSignal(name.clone()))
                        })
                        .collect::<Result<_, _>>()?;
                    Node::Prop {
                        terms,
                        constant: p.expr.constant,
                        op: p.op,
                    }
                }
                Formula::Not(g) => Node::Not(self.push(g, trace)?),
                Formula::And(gs) => Node::And(gs.iter().map(|g| self.push(g, trace)).collect::<Result<_, _>>()?),
                Formula::Or(gs) => Node::Or(gs.iter().map(|g| self.push(g, trace)).collect::<Result<_, _>>()?),
                Formula::Until(l, r, i) => {
                    let lhs = self.push(l, trace)?;
                    let rhs = self.push(r, trace)?;
                    let (lo, hi) = i.steps(dt);
                    Node::Until { lhs, rhs, lo, hi }
                }
                Formula::Eventually(g, i) => {
                    let child = self.push(g, trace)?;
                    let (lo, hi) = i.steps(dt);
                    Node::Eventually { child, lo, hi }
                }
                Formula::Always(g, i) => {
                    let child = self.push(g, trace)?;
                    let (lo, hi) = i.steps(dt);
                    Node::Always { child, lo, hi }
                }
            }
        };
        self.nodes.push(node);
        Ok(self.nodes.len() - 1)
    }

    /// Robustness at step `t` of the trace truncated to `len` steps.
    pub(crate) fn eval(&self, trace: &Trace, len: usize, t: usize, mode: Mode) -> Result<f64, EvalError> {
        if t >= len || len > trace.len() {
            return Err(EvalError::TimeOutOfRange {
                time: t,
                len: len.min(trace.len()),
            });
        }
        let n = self.nodes.len();
        let root = n - 1;
        let last = len - 1;
        let window_end = |b: usize, hi: Option<usize>| hi.map_or(last, |h| (b + h).min(last));

        let mut ranges: Vec<Option<(usize, usize)>> = vec![None; n];
        ranges[root] = Some((t, t));
        for idx in (0..n).rev() {
            let Some((a, b)) = ranges[idx] else { continue };
            match &self.nodes[idx] {
                Node::Const(_) | Node::Prop { .. } => {}
                Node::Not(c) => ranges[*c] = Some((a, b)),
                Node::And(cs) | Node::Or(cs) => {
                    for c in cs {
                        ranges[*c] = Some((a, b));
                    }
                }
                Node::Eventually { child, lo, hi } | Node::Always { child, lo, hi } => {
                    if a + lo <= last {
                        ranges[*child] = Some((a + lo, window_end(b, *hi)));
                    }
                }
                Node::Until { lhs, rhs, lo, hi } => {
                    if a + lo <= last {
                        ranges[*rhs] = Some((a + lo, window_end(b, *hi)));
                    }
                    ranges[*lhs] = Some((a, window_end(b, *hi)));
                }
            }
        }

        let mut values: Vec<Vec<f64>> = vec![Vec::new(); n];
        for idx in 0..n {
            let Some((a, b)) = ranges[idx] else { continue };
            let at = |node: usize, u: usize| -> f64 {
                let start = ranges[node].expect("child range").0;
                values[node][u - start]
            };
            let empty = |s: usize| EvalError::HorizonTooShort { time: s, len };
            let mut out = Vec::with_capacity(b - a + 1);
            match &self.nodes[idx] {
                Node::Const(v) => out.resize(b - a + 1, *v),
                Node::Prop { terms, constant, op } => {
                    for s in a..=b {
                        let mut acc = *constant;
                        for (col, c) in terms {
                            match trace.column(*col)[s] {
                                Value::Num(x) => acc += c * x,
                                Value::Placeholder(_) => {
                                    return Err(EvalError::UnresolvedPlaceholder {
                                        signal: self.signals[*col].clone(),
                                        step: s,
                                    })
                                }
                            }
                        }
                        out.push(op.robustness(acc));
                    }
                }
                Node::Not(c) => out.extend((a..=b).map(|s| -at(*c, s))),
                Node::And(cs) | Node::Or(cs) => {
                    let is_and = matches!(self.nodes[idx], Node::And(_));
                    let mut buf = Vec::with_capacity(cs.len());
                    for s in a..=b {
                        buf.clear();
                        buf.extend(cs.iter().map(|c| at(*c, s)));
                        out.push(aggregate(&buf, is_and, mode));
                    }
                }
                Node::Eventually { child, lo, hi } | Node::Always { child, lo, hi } => {
                    let is_min = matches!(self.nodes[idx], Node::Always { .. });
                    if a + lo > last {
                        return Err(empty(a));
                    }
                    if b + lo > last {
                        return Err(empty(last - lo + 1));
                    }
                    let cstart = ranges[*child].expect("child range").0;
                    let cvals = &values[*child];
                    match mode {
                        Mode::Discrete => {
                            sliding_extreme(cvals, cstart, a, b, *lo, |s| window_end(s, *hi), is_min, &mut out)
                        }
                        Mode::Smooth(_) => {
                            for s in a..=b {
                                let w = &cvals[s + lo - cstart..=window_end(s, *hi) - cstart];
                                out.push(aggregate(w, is_min, mode));
                            }
                        }
                    }
                }
                Node::Until { lhs, rhs, lo, hi } => {
                    if b + lo > last {
                        return Err(empty(last.saturating_sub(*lo) + 1));
                    }
                    let lstart = ranges[*lhs].expect("lhs range").0;
                    let lvals = &values[*lhs];
                    let mut cands = Vec::new();
                    for s in a..=b {
                        let we = window_end(s, *hi);
                        cands.clear();
                        match mode {
                            Mode::Discrete => {
                                let mut running = f64::INFINITY;
                                for t1 in s..=we {
                                    running = running.min(lvals[t1 - lstart]);
                                    if t1 >= s + lo {
                                        cands.push(at(*rhs, t1).min(running));
                                    }
                                }
                                out.push(cands.iter().copied().fold(f64::NEG_INFINITY, f64::max));
                            }
                            Mode::Smooth(a_s) => {
                                for t1 in s + lo..=we {
                                    let inner = softmin(&lvals[s - lstart..=t1 - lstart], a_s);
                                    cands.push(softmin(&[at(*rhs, t1), inner], a_s));
                                }
                                out.push(softmax(&cands, a_s));
                            }
                        }
                    }
                }
            }
            values[idx] = out;
        }
        Ok(values[root][0])
    }
}

fn aggregate(xs: &[f64], is_min: bool, mode: Mode) -> f64 {
    match (mode, is_min) {
        (Mode::Discrete, true) => xs.iter().copied().fold(f64::INFINITY, f64::min),
        (Mode::Discrete, false) => xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        (Mode::Smooth(a), true) => softmin(xs, a),
        (Mode::Smooth(a), false) => softmax(xs, a),
    }
}

/// Max (or min) over the windows `[s+lo, end(s)]` for `s` in `a..=b` with a
/// monotone deque. Both window ends are non-decreasing in `s`.
#[allow(clippy::too_many_arguments)]
fn sliding_extreme(
    vals: &[f64],
    start: usize,
    a: usize,
    b: usize,
    lo: usize,
    end: impl Fn(usize) -> usize,
    is_min: bool,
    out: &mut Vec<f64>,
) {
    let better = |x: f64, y: f64| if is_min { x <= y } else { x >= y };
    let mut dq: VecDeque<usize> = VecDeque::new();
    let mut next = a + lo;
    for s in a..=b {
        let we = end(s);
        while next <= we {
            let v = vals[next - start];
            while let Some(&back) = dq.back() {
                if better(v, vals[back - start]) {
                    dq.pop_back();
                } else {
                    break;
                }
            }
            dq.push_back(next);
            next += 1;
        }
        while let Some(&front) = dq.front() {
            if front < s + lo {
                dq.pop_front();
            } else {
                break;
            }
        }
        out.push(vals[*dq.front().expect("non-empty window") - start]);
    }
}
