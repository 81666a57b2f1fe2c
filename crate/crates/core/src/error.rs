//! Error types shared across the crate.

use thiserror::Error;

/// Failure while parsing or resolving a specification.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown signal `{name}` at {line}:{column}")]
    UnknownSignal { name: String, line: usize, column: usize },
    #[error("unknown literal `{literal}` for signal `{signal}` at {line}:{column}")]
    UnknownEnumLiteral {
        signal: String,
        literal: String,
        line: usize,
        column: usize,
    },
    #[error("malformed interval [{lower}, {upper}] at {line}:{column}")]
    MalformedInterval {
        lower: f64,
        upper: f64,
        line: usize,
        column: usize,
    },
    #[error("unknown formula `{0}`")]
    UnknownFormula(String),
    #[error("specification defines no formulas")]
    Empty,
}

/// Failure while building or reading a trace.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("waypoint times must be strictly increasing (index {index})")]
    NonIncreasingTime { index: usize },
    #[error("waypoint spacing is not uniform (index {index}: {found} s, expected {expected} s)")]
    NonUniformSpacing { index: usize, found: f64, expected: f64 },
    #[error("invalid time step {0}")]
    InvalidStep(f64),
    #[error("signal `{0}` has no source")]
    NoSource(String),
    #[error("signal `{0}` is not in the trace")]
    MissingSignal(String),
    #[error("map has no `{0}` for the ego route")]
    MissingArtifact(String),
    #[error("unknown lane `{0}`")]
    UnknownLane(String),
    #[error("signal `{signal}` has {found} values, expected {expected}")]
    LengthMismatch {
        signal: String,
        found: usize,
        expected: usize,
    },
    #[error("placeholder slot {slot} is shared between signals or leaves a gap in the numbering")]
    PlaceholderSlot { slot: usize },
    #[error("placeholder search needs {slots} joint slots, limit is {limit}")]
    TooManyPlaceholders { slots: usize, limit: usize },
}

/// Failure while evaluating robustness or gradients.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("time index {time} outside trace of length {len}")]
    TimeOutOfRange { time: usize, len: usize },
    #[error("window of a temporal operator at index {time} is empty (trace length {len})")]
    HorizonTooShort { time: usize, len: usize },
    #[error("step {time} lies outside the window {start}..={end}")]
    OutsideWindow { time: usize, start: usize, end: usize },
    #[error("trace holds unresolved placeholder for `{signal}` at step {step}")]
    UnresolvedPlaceholder { signal: String, step: usize },
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// Failure of the repair stage.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RepairError {
    #[error("no controllable signal at step {step} has a usable gradient")]
    NoControllableSignal { step: usize },
    #[error("no edit of `{signal}` at step {step} increases smooth robustness")]
    NoImprovement { signal: String, step: usize },
    #[error("no drivable position moves `{signal}` toward its target at step {step}")]
    Infeasible { signal: String, step: usize },
    #[error("signal `{0}` cannot be edited")]
    NotControllable(String),
    #[error("step {step} outside trajectory of length {len}")]
    StepOutOfRange { step: usize, len: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// Failure while loading a scenario, trajectory or trace file.
#[derive(Debug, Error)]
pub enum LoadError {
    #[error("unsupported schema version {0}")]
    Schema(u32),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Umbrella error for callers that mix stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Repair(#[from] RepairError),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Horizon(#[from] crate::sim::HorizonError),
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
