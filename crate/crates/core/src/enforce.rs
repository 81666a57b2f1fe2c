//! Plan validation and control validation.

use std::time::Instant;

use serde::Serialize;

use crate::error::{EvalError, RepairError, Result};
use crate::repair::{repair_at, RepairAction, RepairConfig};
use crate::robustness::{earliest_at_or_below, rho};
use crate::spec::{encode_bool, Formula, SignalRegistry};
use crate::trace::{
    build_trace, resolve_placeholders, Assignment, Commands, PlannedTrajectory, PredictedEnvironment, Switches, Trace,
};

/// What happened at one planning tick.
#[derive(Debug, Clone, Serialize)]
pub struct TickRecord {
    pub time: f64,
    /// Discrete robustness of the planned trace before any repair.
    pub rho: f64,
    pub triggered: bool,
    pub action: Option<RepairAction>,
    /// Discrete robustness of the whole repaired trace.
    pub rho_repaired: Option<f64>,
    /// Why a triggered tick left the plan unchanged.
    pub failure: Option<String>,
    /// Command switches flipped by control validation.
    pub flips: usize,
    /// Wall time of the plan-validation stage.
    pub eval_ms: f64,
}

impl TickRecord {
    /// Robustness gained per unit of change: positional difference in
    /// metres plus flipped switches.
    pub fn objective(&self) -> Option<f64> {
        let action = self.action.as_ref()?;
        let cost = action.positional_difference + self.flips as f64;
        let gain = self.rho_repaired? - self.rho;
        (cost > 0.0).then(|| gain / cost)
    }
}

/// Output of [`enforce_tick`].
#[derive(Debug, Clone)]
pub struct TickOutput {
    pub trajectory: PlannedTrajectory,
    pub record: TickRecord,
    /// Best command values over the plan.
    pub assignment: Assignment,
    /// Trace of the plan as received, command signals left open.
    pub open_trace: Trace,
}

/// Checks a planned trajectory and repairs it once if its robustness is at
/// or below `config.theta`. Repair failures are recorded, not returned.
pub fn enforce_tick(
    formula: &Formula,
    trajectory: &PlannedTrajectory,
    env: &PredictedEnvironment,
    registry: &SignalRegistry,
    config: &RepairConfig,
) -> Result<TickOutput> {
    let started = Instant::now();
    let open = build_trace(formula, trajectory, env, registry, Commands::Placeholders)?;
    let (assignment, trace) = resolve_placeholders(formula, &open, registry)?;
    let value = rho(formula, &trace, 0)?;
    let mut record = TickRecord {
        time: trajectory.start_time(),
        rho: value,
        triggered: false,
        action: None,
        rho_repaired: None,
        failure: None,
        flips: 0,
        eval_ms: 0.0,
    };
    let mut out = trajectory.clone();
    if value <= config.theta {
        record.triggered = true;
        let k = earliest_at_or_below(formula, &trace, config.theta)?.unwrap_or(trace.len() - 1);
        let k = config.first_editable(k, trace.len());
        match repair_at(formula, trajectory, &trace, env, registry, k, config) {
            Ok(fixed) => {
                let repaired = build_trace(formula, &fixed.trajectory, env, registry, Commands::Placeholders)?
                    .substitute(&assignment);
                record.rho_repaired = Some(rho(formula, &repaired, 0)?);
                record.action = Some(fixed.action);
                out = fixed.trajectory;
            }
            Err(
                e @ (RepairError::NoControllableSignal { .. }
                | RepairError::NoImprovement { .. }
                | RepairError::Infeasible { .. }
                | RepairError::NotControllable(_)),
            ) => {
                log::debug!("tick at {:.2}s left unrepaired: {e}", record.time);
                record.failure = Some(e.to_string());
            }
            Err(e) => return Err(e.into()),
        }
    }
    record.eval_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok(TickOutput {
        trajectory: out,
        record,
        assignment,
        open_trace: open,
    })
}

/// Corrects the switch commands about to be sent.
///
/// `open_trace` is the plan's trace with command placeholders and
/// `assignment` the best values for them. The pending switches are kept
/// when using them at the current step satisfies the specification or does
/// as well as the assignment; otherwise every switch in the specification
/// takes its assigned value.
/// Returns the corrected switches and the number flipped.
pub fn validate_commands(
    formula: &Formula,
    open_trace: &Trace,
    assignment: &Assignment,
    pending: &Switches,
) -> Result<(Switches, usize), EvalError> {
    if assignment.slots.is_empty() {
        return Ok((pending.clone(), 0));
    }
    let best = rho(formula, &open_trace.substitute(assignment), 0)?;
    let mut with_pending = assignment.clone();
    for (slot, name) in assignment.slots.iter().enumerate() {
        with_pending.values[0][slot] = encode_bool(pending.get(name).copied().unwrap_or(false));
    }
    let kept = rho(formula, &open_trace.substitute(&with_pending), 0)?;
    if kept > 0.0 || kept >= best {
        return Ok((pending.clone(), 0));
    }
    let mut out = pending.clone();
    let mut flips = 0;
    for (slot, name) in assignment.slots.iter().enumerate() {
        let want = assignment.values[0][slot] > 0.0;
        let had = pending.get(name).copied().unwrap_or(false);
        if want != had {
            flips += 1;
        }
        out.insert(name.clone(), want);
    }
    Ok((out, flips))
}
