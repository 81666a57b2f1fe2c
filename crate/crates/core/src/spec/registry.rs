//! Signal catalogue: value kinds, enum codes, sources and controllability.

use serde::{Deserialize, Serialize};

/// Numeric encoding of a boolean `true`.
pub const BOOL_TRUE: f64 = 1.0;
/// Numeric encoding of a boolean `false`.
pub const BOOL_FALSE: f64 = -1.0;

pub fn encode_bool(value: bool) -> f64 {
    if value {
        BOOL_TRUE
    } else {
        BOOL_FALSE
    }
}

/// Where the value of a signal comes from when a trace is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalSource {
    Trajectory,
    Environment,
    Command,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ValueKind {
    Numeric { unit: &'static str },
    Enum { literals: &'static [(&'static str, i32)] },
    Boolean,
}

impl ValueKind {
    /// Finite value domain used when searching placeholder assignments.
    pub fn domain(&self) -> Vec<f64> {
        match self {
            ValueKind::Boolean => vec![BOOL_FALSE, BOOL_TRUE],
            ValueKind::Enum { literals } => literals.iter().map(|(_, c)| *c as f64).collect(),
            ValueKind::Numeric { .. } => Vec::new(),
        }
    }
}

pub const TL_COLORS: &[(&str, i32)] = &[("yellow", 0), ("green", 1), ("red", 2), ("black", 3)];
pub const DIRECTIONS: &[(&str, i32)] = &[("forward", 0), ("left", 1), ("right", 2)];

#[derive(Debug, Clone, PartialEq)]
pub struct SignalInfo {
    pub name: String,
    pub kind: ValueKind,
    pub source: SignalSource,
    pub controllable: bool,
    /// Registration order, used as a deterministic tie-break.
    pub order: usize,
}

#[derive(Debug, Clone)]
struct Family {
    head: &'static str,
    numeric_arg: bool,
    kind: ValueKind,
    source: SignalSource,
    controllable: bool,
}

/// Lookup table from signal names to their metadata.
///
/// Fixed names are matched exactly; parameterised families such as
/// `D(<artifact>)` or `PriorityV(<metres>)` match by head.
#[derive(Debug, Clone)]
pub struct SignalRegistry {
    fixed: Vec<SignalInfo>,
    families: Vec<Family>,
}

impl Default for SignalRegistry {
    fn default() -> Self {
        Self::standard()
    }
}

impl SignalRegistry {
    pub fn empty() -> Self {
        SignalRegistry {
            fixed: Vec::new(),
            families: Vec::new(),
        }
    }

    /// The catalogue used by the driving laws.
    pub fn standard() -> Self {
        use SignalSource::*;
        let mut reg = Self::empty();
        let metres = ValueKind::Numeric { unit: "m" };
        reg.register("speed", ValueKind::Numeric { unit: "m/s" }, Trajectory, true);
        reg.register("acc", ValueKind::Numeric { unit: "m/s^2" }, Trajectory, true);
        reg.register("direction", ValueKind::Enum { literals: DIRECTIONS }, Trajectory, true);
        reg.register("D(stopline)", metres.clone(), Trajectory, true);
        reg.register("D(junction)", metres.clone(), Trajectory, true);
        reg.register("TL(color)", ValueKind::Enum { literals: TL_COLORS }, Environment, false);
        reg.register("TL(blink)", ValueKind::Boolean, Environment, false);
        reg.register("fog", ValueKind::Numeric { unit: "" }, Environment, false);
        reg.register("snow", ValueKind::Numeric { unit: "" }, Environment, false);
        reg.register("rain", ValueKind::Numeric { unit: "" }, Environment, false);
        for switch in [
            "fogLight",
            "warningFlash",
            "highBeam",
            "lowBeam",
            "leftTurnSignal",
            "rightTurnSignal",
            "hornOn",
        ] {
            reg.register(switch, ValueKind::Boolean, Command, false);
        }
        reg.families.push(Family {
            head: "D",
            numeric_arg: false,
            kind: metres.clone(),
            source: Trajectory,
            controllable: true,
        });
        reg.families.push(Family {
            head: "Lane",
            numeric_arg: false,
            kind: metres,
            source: Trajectory,
            controllable: true,
        });
        for head in ["PriorityV", "PriorityP"] {
            reg.families.push(Family {
                head,
                numeric_arg: true,
                kind: ValueKind::Boolean,
                source: Environment,
                controllable: false,
            });
        }
        reg
    }

    /// Adds (or replaces) a fixed signal.
    pub fn register(&mut self, name: &str, kind: ValueKind, source: SignalSource, controllable: bool) {
        self.fixed.retain(|s| s.name != name);
        let order = self.fixed.len();
        self.fixed.push(SignalInfo {
            name: name.to_string(),
            kind,
            source,
            controllable,
            order,
        });
    }

    pub fn resolve(&self, name: &str) -> Option<SignalInfo> {
        if let Some(info) = self.fixed.iter().find(|s| s.name == name) {
            return Some(info.clone());
        }
        let (head, arg) = split_call(name)?;
        let family = self.families.iter().find(|f| f.head == head)?;
        let arg_ok = if family.numeric_arg {
            arg.parse::<f64>().map(|v| v.is_finite() && v >= 0.0).unwrap_or(false)
        } else {
            !arg.is_empty()
                && arg
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.')
        };
        if !arg_ok {
            return None;
        }
        Some(SignalInfo {
            name: name.to_string(),
            kind: family.kind.clone(),
            source: family.source,
            controllable: family.controllable,
            order: self.fixed.len() + 1,
        })
    }

    pub fn is_controllable(&self, name: &str) -> bool {
        self.resolve(name).map(|s| s.controllable).unwrap_or(false)
    }

    /// Numeric code of an enum literal (case-insensitive).
    pub fn enum_code(&self, signal: &str, literal: &str) -> Option<i32> {
        match self.resolve(signal)?.kind {
            ValueKind::Enum { literals } => literals
                .iter()
                .find(|(l, _)| l.eq_ignore_ascii_case(literal))
                .map(|(_, c)| *c),
            _ => None,
        }
    }
}

/// Splits `Head(arg)` into its parts.
pub fn split_call(name: &str) -> Option<(&str, &str)> {
    let open = name.find('(')?;
    let inner = name[open + 1..].strip_suffix(')')?;
    Some((&name[..open], inner))
}
