//! Gradient-guided repair of a planned trajectory.
//!
//! The earliest prefix whose robustness is at or below the threshold fixes
//! the step `k`. The controllable signal with the largest smooth-robustness
//! gradient at `k` is pushed by `δ = (θ − ρ)/∂`, halved until the smooth
//! robustness of the prefix goes up, and the push is turned into an edit of
//! waypoint `k`.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{RepairError, TraceError};
use crate::grad::{forward_record, prefix_gradient, Gradient, Tape};
use crate::robustness::{earliest_at_or_below, rho_prefix, rho_smooth_prefix, DEFAULT_SMOOTHNESS};
use crate::spec::registry::split_call;
use crate::spec::{Formula, SignalRegistry, SignalSource};
use crate::trace::{
    build_trace, direction_code, Assignment, Commands, Gear, PlannedTrajectory, PredictedEnvironment, SignalContext,
    Trace, Value, Waypoint,
};

#[derive(Debug, Clone, PartialEq)]
pub struct RepairConfig {
    pub theta: f64,
    /// Smoothness of the smooth robustness used for gradients.
    pub smoothness: f64,
    pub max_halvings: u32,
    /// Grid step of the position search, metres.
    pub position_step: f64,
    /// Half-width of the position search, metres.
    pub search_window: f64,
    /// Gradients at or below this magnitude are ignored.
    pub min_gradient: f64,
    /// Lower bound on `θ − ρ` so a prefix sitting exactly at `θ` still moves.
    pub min_margin: f64,
    /// Waypoints before this index are never edited. At run time waypoint 0
    /// is where the vehicle already is.
    pub frozen_prefix: usize,
}

impl Default for RepairConfig {
    fn default() -> Self {
        RepairConfig {
            theta: 0.0,
            smoothness: DEFAULT_SMOOTHNESS,
            max_halvings: 32,
            position_step: 0.05,
            search_window: 15.0,
            min_gradient: 1e-3,
            min_margin: 1e-3,
            frozen_prefix: 0,
        }
    }
}

impl RepairConfig {
    /// The step actually edited when the earliest low prefix ends at `k`.
    pub fn first_editable(&self, k: usize, len: usize) -> usize {
        k.max(self.frozen_prefix).min(len.saturating_sub(1))
    }

    pub fn with_theta(theta: f64) -> Self {
        RepairConfig {
            theta,
            ..Default::default()
        }
    }
}

/// How an edit to a signal is realised on the trajectory.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum EditKind {
    Speed,
    Acc,
    /// Move along the route; the argument is the artifact key.
    Along(String),
    /// Move sideways; the argument is the lane id.
    Lateral(String),
    Direction,
}

impl EditKind {
    pub fn of(signal: &str) -> Option<EditKind> {
        match signal {
            "speed" => Some(EditKind::Speed),
            "acc" => Some(EditKind::Acc),
            "direction" => Some(EditKind::Direction),
            _ => match split_call(signal)? {
                ("D", key) => Some(EditKind::Along(key.to_string())),
                ("Lane", lane) => Some(EditKind::Lateral(lane.to_string())),
                _ => None,
            },
        }
    }

    /// Tie-break rank: speed, acc, distances, lanes, direction.
    fn rank(signal: &str) -> u8 {
        match EditKind::of(signal) {
            Some(EditKind::Speed) => 0,
            Some(EditKind::Acc) => 1,
            Some(EditKind::Along(_)) => 2,
            Some(EditKind::Lateral(_)) => 3,
            Some(EditKind::Direction) => 4,
            None => 5,
        }
    }

    fn same_channel(&self, other: &EditKind) -> bool {
        std::mem::discriminant(self) == std::mem::discriminant(other)
    }
}

/// A candidate signal for repair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    pub signal: String,
    pub step: usize,
    pub gradient: f64,
}

/// Controllable signals at `step` ordered by decreasing `|gradient|`, ties
/// by kind, then registration order, then name. Gradients at or below
/// `min_gradient` are dropped.
pub fn ranked_signals(grad: &Gradient, step: usize, registry: &SignalRegistry, min_gradient: f64) -> Vec<Selection> {
    let mut out: Vec<(Selection, u8, usize)> = grad
        .at_step(step)
        .into_iter()
        .filter_map(|(name, g)| {
            let info = registry.resolve(name)?;
            (info.controllable && g.abs() > min_gradient).then(|| {
                (
                    Selection {
                        signal: name.to_string(),
                        step,
                        gradient: g,
                    },
                    EditKind::rank(name),
                    info.order,
                )
            })
        })
        .collect();
    out.sort_by(|(a, ra, oa), (b, rb, ob)| {
        let (ga, gb) = (a.gradient.abs(), b.gradient.abs());
        let tol = 1e-12 * ga.max(gb);
        if (ga - gb).abs() > tol {
            gb.partial_cmp(&ga).unwrap()
        } else {
            ra.cmp(rb).then(oa.cmp(ob)).then(a.signal.cmp(&b.signal))
        }
    });
    out.into_iter().map(|(s, _, _)| s).collect()
}

/// The controllable signal with the largest absolute gradient at `step`.
pub fn select_signal(
    grad: &Gradient,
    step: usize,
    registry: &SignalRegistry,
    min_gradient: f64,
) -> Result<Selection, RepairError> {
    ranked_signals(grad, step, registry, min_gradient)
        .into_iter()
        .next()
        .ok_or(RepairError::NoControllableSignal { step })
}

/// `(θ − ρ)/gradient`, with `θ − ρ` floored at `min_margin`.
pub fn initial_delta(theta: f64, rho: f64, gradient: f64, min_margin: f64) -> f64 {
    (theta - rho).max(min_margin) / gradient
}

/// Result of the halving search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Halving {
    pub delta: f64,
    pub halvings: u32,
    /// Smooth robustness after the accepted edit.
    pub value: f64,
}

/// Tries `δ₀, δ₀/2, δ₀/4, …` until `attempt` reports a value strictly above
/// `baseline`. `attempt` returns `None` when an edit cannot be realised.
pub fn halve<E>(
    delta0: f64,
    max_halvings: u32,
    baseline: f64,
    mut attempt: impl FnMut(f64) -> Result<Option<f64>, E>,
) -> Result<Option<Halving>, E> {
    let mut delta = delta0;
    for halvings in 0..=max_halvings {
        if let Some(value) = attempt(delta)? {
            if value > baseline {
                return Ok(Some(Halving { delta, halvings, value }));
            }
        }
        delta /= 2.0;
    }
    Ok(None)
}

/// Magnitude of a trace-level edit of `signal` at step `k`: the first `δ` of
/// the halving sequence that raises `ρ̃(φ, π^k)`.
pub fn magnitude(
    formula: &Formula,
    trace: &Trace,
    signal: &str,
    k: usize,
    gradient: f64,
    config: &RepairConfig,
) -> Result<Halving, RepairError> {
    let col = trace
        .signal_index(signal)
        .ok_or_else(|| TraceError::MissingSignal(signal.to_string()))?;
    let tape = forward_record(formula, trace, k + 1, 0, config.smoothness)?;
    let base = tape.value();
    let rho = rho_prefix(formula, trace, k)?;
    let current = trace.numeric(k, signal)?;
    let delta0 = initial_delta(config.theta, rho, gradient, config.min_margin);
    let found = halve(delta0, config.max_halvings, base, |d| {
        let mut over = HashMap::new();
        over.insert((col, k), current + d);
        Ok::<_, RepairError>(Some(tape.replay(&over)))
    })?;
    found.ok_or_else(|| RepairError::NoImprovement {
        signal: signal.to_string(),
        step: k,
    })
}

/// A change to one waypoint field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "field", rename_all = "snake_case")]
pub enum Edit {
    Speed { from: f64, to: f64 },
    Acc { from: f64, to: f64 },
    Steer { from: f64, to: f64 },
    Position { from: [f64; 2], to: [f64; 2] },
}

impl Edit {
    /// Displacement implied by the edit: `|Δv|·dt` for speed, `|Δa|·dt²` for
    /// acceleration, the moved distance for positions, 0 for steering.
    pub fn positional_difference(&self, dt: f64) -> f64 {
        match *self {
            Edit::Speed { from, to } => (to - from).abs() * dt,
            Edit::Acc { from, to } => (to - from).abs() * dt * dt,
            Edit::Steer { .. } => 0.0,
            Edit::Position { from, to } => crate::trace::map::distance(from, to),
        }
    }

    fn apply(&self, wp: &mut Waypoint) {
        match *self {
            Edit::Speed { to, .. } => wp.speed = to,
            Edit::Acc { to, .. } => wp.acc = to,
            Edit::Steer { to, .. } => wp.steer = to,
            Edit::Position { to, .. } => {
                wp.x = to[0];
                wp.y = to[1];
            }
        }
    }
}

const STEER_FOR_DIRECTION: [f64; 3] = [0.0, 0.1, -0.1];

/// Turns a signal-space change `δ` of `signal` at waypoint `k` into an edit
/// of that waypoint.
pub fn plan_edit(
    wp: &Waypoint,
    ctx: &SignalContext<'_>,
    signal: &str,
    k: usize,
    delta: f64,
    config: &RepairConfig,
) -> Result<Edit, RepairError> {
    let kind = EditKind::of(signal).ok_or_else(|| RepairError::NotControllable(signal.to_string()))?;
    let infeasible = || RepairError::Infeasible {
        signal: signal.to_string(),
        step: k,
    };
    match kind {
        EditKind::Speed => {
            let mut to = wp.speed + delta;
            if wp.gear == Gear::Drive {
                to = to.max(0.0);
            }
            Ok(Edit::Speed { from: wp.speed, to })
        }
        EditKind::Acc => Ok(Edit::Acc {
            from: wp.acc,
            to: wp.acc + delta,
        }),
        EditKind::Direction => {
            let current = direction_code(wp.steer);
            let wanted = (current + delta).round().clamp(0.0, 2.0);
            if wanted == current {
                return Err(infeasible());
            }
            Ok(Edit::Steer {
                from: wp.steer,
                to: STEER_FOR_DIRECTION[wanted as usize],
            })
        }
        EditKind::Along(_) | EditKind::Lateral(_) => {
            let route = ctx.route();
            let here = route.project(wp.position());
            let current = ctx.value(signal, wp)?;
            let target = current + delta;
            let steps = (config.search_window / config.position_step).round() as i64;
            let mut best: Option<(f64, i64, [f64; 2])> = None;
            for i in -steps..=steps {
                let offset = i as f64 * config.position_step;
                let p = match kind {
                    EditKind::Along(_) => route.point_at(here.s + offset, here.d),
                    _ => route.point_at(here.s, here.d + offset),
                };
                if !ctx.env().map.is_drivable(p) {
                    continue;
                }
                let probe = Waypoint {
                    x: p[0],
                    y: p[1],
                    ..*wp
                };
                let miss = (ctx.value(signal, &probe)? - target).abs();
                let better = match best {
                    None => true,
                    Some((m, j, _)) => miss < m - 1e-12 || ((miss - m).abs() <= 1e-12 && i.abs() < j.abs()),
                };
                if better {
                    best = Some((miss, i, p));
                }
            }
            match best {
                Some((miss, i, p)) if i != 0 && miss < (current - target).abs() - 1e-12 => Ok(Edit::Position {
                    from: wp.position(),
                    to: p,
                }),
                _ => Err(infeasible()),
            }
        }
    }
}

/// Applies a signal-space change to waypoint `k`; all other waypoints stay
/// as they are.
pub fn apply_repair(
    trajectory: &PlannedTrajectory,
    ctx: &SignalContext<'_>,
    signal: &str,
    k: usize,
    delta: f64,
    config: &RepairConfig,
) -> Result<(PlannedTrajectory, Edit), RepairError> {
    let wp = trajectory.get(k).ok_or(RepairError::StepOutOfRange {
        step: k,
        len: trajectory.len(),
    })?;
    let edit = plan_edit(wp, ctx, signal, k, delta, config)?;
    let mut new = *wp;
    edit.apply(&mut new);
    Ok((trajectory.with_waypoint(k, new), edit))
}

/// One signal's part of a repair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignalEdit {
    pub signal: String,
    pub gradient: f64,
    /// `δ` before halving.
    pub requested: f64,
    /// `δ` actually applied.
    pub delta: f64,
    pub edit: Edit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepairAction {
    pub step: usize,
    pub edits: Vec<SignalEdit>,
    pub halvings: u32,
    /// Discrete robustness of the prefix ending at `step`.
    pub rho_before: f64,
    pub rho_after: f64,
    /// Smooth robustness of the same prefix.
    pub smooth_before: f64,
    pub smooth_after: f64,
    /// Metres, summed over the edits.
    pub positional_difference: f64,
}

impl RepairAction {
    /// Primary edited signal.
    pub fn signal(&self) -> &str {
        &self.edits[0].signal
    }

    pub fn delta(&self) -> f64 {
        self.edits[0].delta
    }
}

#[derive(Debug, Clone)]
pub struct RepairOutcome {
    pub trajectory: PlannedTrajectory,
    pub action: RepairAction,
}

/// Evaluates edits of one waypoint against a recorded prefix tape.
struct PrefixProbe<'a> {
    tape: Tape,
    trace: &'a Trace,
    ctx: &'a SignalContext<'a>,
    registry: &'a SignalRegistry,
    k: usize,
}

impl PrefixProbe<'_> {
    fn smooth_with(&self, wp: &Waypoint) -> Result<f64, RepairError> {
        let mut over = HashMap::new();
        for (col, name) in self.trace.signals().iter().enumerate() {
            let is_command = self
                .registry
                .resolve(name)
                .is_some_and(|i| i.source == SignalSource::Command);
            if is_command || !matches!(self.trace.column(col)[self.k], Value::Num(_)) {
                continue;
            }
            over.insert((col, self.k), self.ctx.value(name, wp)?);
        }
        Ok(self.tape.replay(&over))
    }
}

/// Builds the trace of `trajectory` with command signals fixed by
/// `assignment`.
pub fn assigned_trace(
    formula: &Formula,
    trajectory: &PlannedTrajectory,
    env: &PredictedEnvironment,
    registry: &SignalRegistry,
    assignment: &Assignment,
) -> Result<Trace, TraceError> {
    Ok(build_trace(formula, trajectory, env, registry, Commands::Placeholders)?.substitute(assignment))
}

/// One repair of `trajectory`, or `None` when `ρ(φ, π) > θ`.
///
/// Command signals are fixed by `assignment`. When no single-signal edit
/// raises the smooth robustness, the two best signals of different kinds
/// are edited together.
pub fn repair_trajectory(
    formula: &Formula,
    trajectory: &PlannedTrajectory,
    env: &PredictedEnvironment,
    registry: &SignalRegistry,
    assignment: &Assignment,
    config: &RepairConfig,
) -> Result<Option<RepairOutcome>, RepairError> {
    let trace = assigned_trace(formula, trajectory, env, registry, assignment)?;
    let Some(k) = earliest_at_or_below(formula, &trace, config.theta)? else {
        return Ok(None);
    };
    let k = config.first_editable(k, trace.len());
    repair_at(formula, trajectory, &trace, env, registry, k, config).map(Some)
}

/// Repairs step `k` of a trajectory whose (assigned) trace is `trace`.
pub fn repair_at(
    formula: &Formula,
    trajectory: &PlannedTrajectory,
    trace: &Trace,
    env: &PredictedEnvironment,
    registry: &SignalRegistry,
    k: usize,
    config: &RepairConfig,
) -> Result<RepairOutcome, RepairError> {
    let ctx = SignalContext::new(env, registry)?;
    let rho_before = rho_prefix(formula, trace, k)?;
    let grad = prefix_gradient(formula, trace, k, config.smoothness)?;
    let ranked: Vec<Selection> = ranked_signals(&grad.gradient, k, registry, config.min_gradient)
        .into_iter()
        .filter(|s| EditKind::of(&s.signal).is_some())
        .collect();
    let first = ranked.first().ok_or(RepairError::NoControllableSignal { step: k })?;
    let probe = PrefixProbe {
        tape: forward_record(formula, trace, k + 1, 0, config.smoothness)?,
        trace,
        ctx: &ctx,
        registry,
        k,
    };
    let base = probe.tape.value();
    let wp = *trajectory.get(k).ok_or(RepairError::StepOutOfRange {
        step: k,
        len: trajectory.len(),
    })?;

    // Single signal first, then the best pair over distinct kinds.
    let mut plans: Vec<Vec<&Selection>> = vec![vec![first]];
    let first_kind = EditKind::of(&first.signal).expect("filtered");
    if let Some(second) = ranked
        .iter()
        .find(|s| !EditKind::of(&s.signal).expect("filtered").same_channel(&first_kind))
    {
        plans.push(vec![first, second]);
    }

    for plan in plans {
        let requested: Vec<f64> = plan
            .iter()
            .map(|s| initial_delta(config.theta, rho_before, s.gradient, config.min_margin))
            .collect();
        let mut edits: Vec<Edit> = Vec::new();
        let found = halve(1.0, config.max_halvings, base, |scale| {
            let mut moved = wp;
            edits.clear();
            for (s, d) in plan.iter().zip(&requested) {
                match plan_edit(&moved, &ctx, &s.signal, k, d * scale, config) {
                    Ok(e) => {
                        e.apply(&mut moved);
                        edits.push(e);
                    }
                    Err(RepairError::Infeasible { .. }) => return Ok(None),
                    Err(e) => return Err(e),
                }
            }
            probe.smooth_with(&moved).map(Some)
        })?;
        let Some(h) = found else { continue };
        let mut new = wp;
        for e in &edits {
            e.apply(&mut new);
        }
        let repaired = trajectory.with_waypoint(k, new);
        let mut after = trace.clone();
        for name in trace.signals() {
            if let Value::Num(_) = trace.value(k, name)? {
                let is_command = registry
                    .resolve(name)
                    .is_some_and(|i| i.source == SignalSource::Command);
                if !is_command {
                    after.set(k, name, Value::Num(ctx.value(name, &new)?))?;
                }
            }
        }
        let dt = trajectory.dt();
        let action = RepairAction {
            step: k,
            edits: plan
                .iter()
                .zip(&requested)
                .zip(&edits)
                .map(|((s, r), e)| SignalEdit {
                    signal: s.signal.clone(),
                    gradient: s.gradient,
                    requested: *r,
                    delta: r * h.delta,
                    edit: *e,
                })
                .collect(),
            halvings: h.halvings,
            rho_before,
            rho_after: rho_prefix(formula, &after, k)?,
            smooth_before: base,
            smooth_after: rho_smooth_prefix(formula, &after, k, config.smoothness)?,
            positional_difference: edits.iter().map(|e| e.positional_difference(dt)).sum(),
        };
        return Ok(RepairOutcome {
            trajectory: repaired,
            action,
        });
    }
    Err(RepairError::NoImprovement {
        signal: first.signal.clone(),
        step: k,
    })
}

#[cfg(test)]
mod tests;
