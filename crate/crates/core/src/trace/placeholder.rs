//! Choosing values for command-derived placeholders.
//!
//! When every placeholder sits in a state subformula reached from the root
//! through conjunctions and `G` only, the robustness is a minimum over
//! per-step terms and each step can be solved on its own. Anything else is
//! searched jointly.

use super::signal_trace::{Assignment, Trace, Value};
use crate::error::{EvalError, TraceError};
use crate::robustness::rho;
use crate::spec::{Formula, SignalRegistry};

/// Largest joint search, in assignments.
pub const JOINT_SEARCH_LIMIT: usize = 1 << 20;

/// Picks placeholder values that maximize discrete robustness. Among
/// maximizers the one closest to the default (every switch off) wins, then
/// the first in enumeration order.
pub fn resolve_placeholders(
    formula: &Formula,
    trace: &Trace,
    registry: &SignalRegistry,
) -> Result<(Assignment, Trace), EvalError> {
    let slots = trace.placeholder_slots();
    let n = trace.len();
    if slots.is_empty() {
        return Ok((
            Assignment {
                slots,
                values: vec![Vec::new(); n],
            },
            trace.clone(),
        ));
    }
    let domains: Vec<Vec<f64>> = slots
        .iter()
        .map(|s| {
            let d = registry.resolve(s).map(|i| i.kind.domain()).unwrap_or_default();
            if d.is_empty() {
                Err(TraceError::NoSource(s.clone()))
            } else {
                Ok(d)
            }
        })
        .collect::<Result<_, _>>()?;
    let cells = placeholder_cells(trace);
    let mut values: Vec<Vec<f64>> = vec![domains.iter().map(|d| d[0]).collect(); n];

    if is_decoupled(formula, &slots) {
        solve_per_step(formula, trace, &slots, &domains, &cells, &mut values)?;
    } else {
        solve_jointly(formula, trace, &domains, &cells, &mut values)?;
    }
    let assignment = Assignment { slots, values };
    let resolved = trace.substitute(&assignment);
    Ok((assignment, resolved))
}

/// `(step, slot, signal column)` for every placeholder cell.
fn placeholder_cells(trace: &Trace) -> Vec<(usize, usize, usize)> {
    let mut cells = Vec::new();
    for col in 0..trace.signals().len() {
        for (step, v) in trace.column(col).iter().enumerate() {
            if let Value::Placeholder(slot) = v {
                cells.push((step, *slot, col));
            }
        }
    }
    cells.sort();
    cells
}

fn mentions_any(f: &Formula, slots: &[String]) -> bool {
    slots.iter().any(|s| f.mentions(s))
}

fn is_decoupled(f: &Formula, slots: &[String]) -> bool {
    if !mentions_any(f, slots) || f.is_state_formula() {
        return true;
    }
    match f {
        Formula::And(cs) => cs.iter().all(|c| is_decoupled(c, slots)),
        Formula::Always(c, _) => is_decoupled(c, slots),
        _ => false,
    }
}

/// Placeholder-bearing state subformulas with the steps they are evaluated at.
fn leaves<'f>(f: &'f Formula, slots: &[String], times: Vec<bool>, dt: f64, out: &mut Vec<(&'f Formula, Vec<bool>)>) {
    if !mentions_any(f, slots) || times.iter().all(|t| !t) {
        return;
    }
    if f.is_state_formula() {
        out.push((f, times));
        return;
    }
    match f {
        Formula::And(cs) => {
            for c in cs {
                leaves(c, slots, times.clone(), dt, out);
            }
        }
        Formula::Always(c, i) => {
            let n = times.len();
            let (lo, hi) = i.steps(dt);
            let mut next = vec![false; n];
            for (s, _) in times.iter().enumerate().filter(|(_, on)| **on) {
                let end = hi.map_or(n - 1, |h| (s + h).min(n - 1));
                for slot in next.iter_mut().take(end + 1).skip(s + lo) {
                    *slot = true;
                }
            }
            leaves(c, slots, next, dt, out);
        }
        _ => unreachable!("checked by is_decoupled"),
    }
}

/// All assignments of one step's slots, default-closest first.
fn candidates(domains: &[&Vec<f64>]) -> Vec<Vec<usize>> {
    let mut all: Vec<Vec<usize>> = vec![Vec::new()];
    for d in domains {
        all = all
            .into_iter()
            .flat_map(|prefix| {
                (0..d.len()).map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    all.sort_by_key(|c| c.iter().filter(|v| **v != 0).count());
    all
}

/// One step's open cells as `(slot, column)`, its candidate choices and
/// their local scores.
type StepChoices = (Vec<(usize, usize)>, Vec<Vec<usize>>, Vec<f64>);

fn solve_per_step(
    formula: &Formula,
    trace: &Trace,
    slots: &[String],
    domains: &[Vec<f64>],
    cells: &[(usize, usize, usize)],
    values: &mut [Vec<f64>],
) -> Result<(), EvalError> {
    let n = trace.len();
    let mut roots = vec![false; n];
    roots[0] = true;
    let mut found = Vec::new();
    leaves(formula, slots, roots, trace.dt(), &mut found);

    let mut work = trace.clone();
    for (step, v) in values.iter().enumerate() {
        for &(s, slot, col) in cells.iter().filter(|c| c.0 == step) {
            let _ = s;
            work.set(step, &trace.signals()[col], Value::Num(v[slot]))?;
        }
    }

    // Per step: the local objective of every candidate.
    let mut per_step: Vec<Option<StepChoices>> = vec![None; n];
    for step in 0..n {
        let active: Vec<&(&Formula, Vec<bool>)> = found.iter().filter(|(_, m)| m[step]).collect();
        let step_cells: Vec<(usize, usize)> = cells.iter().filter(|c| c.0 == step).map(|c| (c.1, c.2)).collect();
        if active.is_empty() || step_cells.is_empty() {
            continue;
        }
        let doms: Vec<&Vec<f64>> = step_cells.iter().map(|(slot, _)| &domains[*slot]).collect();
        let cands = candidates(&doms);
        let mut scores = Vec::with_capacity(cands.len());
        for cand in &cands {
            for ((slot, col), choice) in step_cells.iter().zip(cand) {
                work.set(step, &trace.signals()[*col], Value::Num(domains[*slot][*choice]))?;
            }
            let mut local = f64::INFINITY;
            for (leaf, _) in &active {
                local = local.min(rho(leaf, &work, step)?);
            }
            scores.push(local);
        }
        // Leave the default in place for the next step's evaluations.
        for (slot, col) in &step_cells {
            work.set(step, &trace.signals()[*col], Value::Num(domains[*slot][0]))?;
        }
        per_step[step] = Some((step_cells, cands, scores));
    }

    // Best local choice everywhere gives the optimum; then move each step
    // back toward the default while staying at or above it.
    let mut best_values = values.to_vec();
    for (step, entry) in per_step.iter().enumerate() {
        if let Some((step_cells, cands, scores)) = entry {
            let best = first_max(scores);
            for ((slot, _), choice) in step_cells.iter().zip(&cands[best]) {
                best_values[step][*slot] = domains[*slot][*choice];
            }
        }
    }
    let optimum = rho(
        formula,
        &trace.substitute(&Assignment {
            slots: slots.to_vec(),
            values: best_values,
        }),
        0,
    )?;
    for (step, entry) in per_step.iter().enumerate() {
        if let Some((step_cells, cands, scores)) = entry {
            let best = first_max(scores);
            let pick = scores.iter().position(|s| *s >= optimum).unwrap_or(best);
            for ((slot, _), choice) in step_cells.iter().zip(&cands[pick]) {
                values[step][*slot] = domains[*slot][*choice];
            }
        }
    }
    Ok(())
}

fn first_max(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

fn solve_jointly(
    formula: &Formula,
    trace: &Trace,
    domains: &[Vec<f64>],
    cells: &[(usize, usize, usize)],
    values: &mut [Vec<f64>],
) -> Result<(), EvalError> {
    // One variable per (step, slot); several columns may share a slot.
    let mut vars: Vec<(usize, usize)> = cells.iter().map(|c| (c.0, c.1)).collect();
    vars.dedup();
    let mut total: usize = 1;
    for (_, slot) in &vars {
        total = total.saturating_mul(domains[*slot].len());
        if total > JOINT_SEARCH_LIMIT {
            return Err(TraceError::TooManyPlaceholders {
                slots: vars.len(),
                limit: JOINT_SEARCH_LIMIT.trailing_zeros() as usize,
            }
            .into());
        }
    }
    let mut work = trace.clone();
    let mut digits = vec![0usize; vars.len()];
    let mut best: Option<(f64, usize, Vec<usize>)> = None;
    for _ in 0..total {
        for &(step, slot, col) in cells {
            let var = vars.iter().position(|v| *v == (step, slot)).expect("var");
            work.set(step, &trace.signals()[col], Value::Num(domains[slot][digits[var]]))?;
        }
        let score = rho(formula, &work, 0)?;
        let flips = digits.iter().filter(|d| **d != 0).count();
        let better = match &best {
            None => true,
            Some((s, f, _)) => score > *s || (score == *s && flips < *f),
        };
        if better {
            best = Some((score, flips, digits.clone()));
        }
        for (i, (_, slot)) in vars.iter().enumerate() {
            digits[i] += 1;
            if digits[i] < domains[*slot].len() {
                break;
            }
            digits[i] = 0;
        }
    }
    let (_, _, digits) = best.expect("at least one assignment");
    for (i, (step, slot)) in vars.iter().enumerate() {
        values[*step][*slot] = domains[*slot][digits[i]];
    }
    Ok(())
}
