//! Wengert list for smooth robustness.

use std::collections::HashMap;

use crate::robustness::{softmax, softmax_weights, softmin, softmin_weights};
use crate::spec::Comparison;

#[derive(Debug, Clone)]
pub enum Op {
    Const,
    /// A trace cell, `(column, step)`.
    Input(usize, usize),
    /// `op(constant + Σ coeff·input)`.
    Prop {
        terms: Vec<(usize, f64)>,
        constant: f64,
        op: Comparison,
    },
    Neg(usize),
    SoftMax(Vec<usize>),
    SoftMin(Vec<usize>),
}

/// Operations in evaluation order; every operand precedes its user.
#[derive(Debug, Clone)]
pub struct Tape {
    a: f64,
    ops: Vec<Op>,
    values: Vec<f64>,
    root: usize,
}

impl Tape {
    pub(crate) fn new(a: f64) -> Self {
        Tape {
            a,
            ops: Vec::new(),
            values: Vec::new(),
            root: 0,
        }
    }

    pub(crate) fn push(&mut self, op: Op, value: f64) -> usize {
        self.ops.push(op);
        self.values.push(value);
        self.ops.len() - 1
    }

    pub(crate) fn push_input(&mut self, value: f64, cell: (usize, usize)) -> usize {
        self.push(Op::Input(cell.0, cell.1), value)
    }

    pub(crate) fn push_prop(&mut self, terms: Vec<(usize, f64)>, constant: f64, op: Comparison) -> usize {
        let v = prop_value(&terms, constant, op, &self.values);
        self.push(Op::Prop { terms, constant, op }, v)
    }

    pub(crate) fn push_neg(&mut self, child: usize) -> usize {
        let v = -self.values[child];
        self.push(Op::Neg(child), v)
    }

    pub(crate) fn push_softmax(&mut self, ids: Vec<usize>, a: f64) -> usize {
        let xs: Vec<f64> = ids.iter().map(|i| self.values[*i]).collect();
        self.push(Op::SoftMax(ids), softmax(&xs, a))
    }

    pub(crate) fn push_softmin(&mut self, ids: Vec<usize>, a: f64) -> usize {
        let xs: Vec<f64> = ids.iter().map(|i| self.values[*i]).collect();
        self.push(Op::SoftMin(ids), softmin(&xs, a))
    }

    pub(crate) fn set_root(&mut self, root: usize) {
        self.root = root;
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn ops(&self) -> &[Op] {
        &self.ops
    }

    /// Value of the root.
    pub fn value(&self) -> f64 {
        self.values[self.root]
    }

    pub fn node_value(&self, id: usize) -> f64 {
        self.values[id]
    }

    /// `(node, (column, step))` for every recorded input.
    pub fn inputs(&self) -> impl Iterator<Item = (usize, (usize, usize))> + '_ {
        self.ops.iter().enumerate().filter_map(|(i, op)| match op {
            Op::Input(c, s) => Some((i, (*c, *s))),
            _ => None,
        })
    }

    /// Adjoint of every node with respect to the root.
    pub fn backward(&self) -> Vec<f64> {
        let mut adj = vec![0.0; self.ops.len()];
        if self.ops.is_empty() {
            return adj;
        }
        adj[self.root] = 1.0;
        for id in (0..=self.root).rev() {
            let g = adj[id];
            if g == 0.0 {
                continue;
            }
            match &self.ops[id] {
                Op::Const | Op::Input(..) => {}
                Op::Prop { terms, constant, op } => {
                    let acc = linear(terms, *constant, &self.values);
                    let slope = slope(*op, acc);
                    for (child, c) in terms {
                        adj[*child] += g * slope * c;
                    }
                }
                Op::Neg(c) => adj[*c] -= g,
                Op::SoftMax(ids) | Op::SoftMin(ids) => {
                    let xs: Vec<f64> = ids.iter().map(|i| self.values[*i]).collect();
                    let w = if matches!(self.ops[id], Op::SoftMax(_)) {
                        softmax_weights(&xs, self.a)
                    } else {
                        softmin_weights(&xs, self.a)
                    };
                    for (child, wi) in ids.iter().zip(w) {
                        adj[*child] += g * wi;
                    }
                }
            }
        }
        adj
    }

    /// Re-runs the recorded computation with some inputs replaced. Keys are
    /// `(column, step)` cells.
    pub fn replay(&self, overrides: &HashMap<(usize, usize), f64>) -> f64 {
        let mut vals = Vec::with_capacity(self.ops.len());
        for (id, op) in self.ops.iter().enumerate() {
            let v = match op {
                Op::Const => self.values[id],
                Op::Input(c, s) => overrides.get(&(*c, *s)).copied().unwrap_or(self.values[id]),
                Op::Prop { terms, constant, op } => prop_value(terms, *constant, *op, &vals),
                Op::Neg(c) => -vals[*c],
                Op::SoftMax(ids) | Op::SoftMin(ids) => {
                    let xs: Vec<f64> = ids.iter().map(|i| vals[*i]).collect();
                    if matches!(op, Op::SoftMax(_)) {
                        softmax(&xs, self.a)
                    } else {
                        softmin(&xs, self.a)
                    }
                }
            };
            vals.push(v);
        }
        vals[self.root]
    }
}

fn linear(terms: &[(usize, f64)], constant: f64, values: &[f64]) -> f64 {
    let mut acc = constant;
    for (i, c) in terms {
        acc += c * values[*i];
    }
    acc
}

fn prop_value(terms: &[(usize, f64)], constant: f64, op: Comparison, values: &[f64]) -> f64 {
    op.robustness(linear(terms, constant, values))
}

/// Derivative of `op.robustness` at `acc`; the kink of `|·|` gets 0.
fn slope(op: Comparison, acc: f64) -> f64 {
    let sign = if acc > 0.0 {
        1.0
    } else if acc < 0.0 {
        -1.0
    } else {
        0.0
    };
    match op {
        Comparison::Lt | Comparison::Le => -1.0,
        Comparison::Gt | Comparison::Ge => 1.0,
        Comparison::Ne => sign,
        Comparison::Eq => -sign,
    }
}
