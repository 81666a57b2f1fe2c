//! Discrete-time signal traces.

use serde::{Deserialize, Serialize};

use crate::error::{EvalError, LoadError, TraceError};
use crate::spec::{encode_bool, SignalRegistry};

/// One cell of a trace: a number, or an unresolved command value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Num(f64),
    /// Index into the trace's placeholder slots.
    Placeholder(usize),
}

impl Value {
    pub fn as_num(self) -> Option<f64> {
        match self {
            Value::Num(v) => Some(v),
            Value::Placeholder(_) => None,
        }
    }
}

/// Values chosen for the placeholder slots, per step.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// Signal name of each slot.
    pub slots: Vec<String>,
    /// `values[step][slot]`.
    pub values: Vec<Vec<f64>>,
}

impl Assignment {
    pub fn get(&self, step: usize, signal: &str) -> Option<f64> {
        let slot = self.slots.iter().position(|s| s == signal)?;
        self.values.get(step).map(|row| row[slot])
    }
}

/// Column-major trace: `columns[signal][step]`, sampled every `dt` seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    dt: f64,
    start_time: f64,
    signals: Vec<String>,
    columns: Vec<Vec<Value>>,
    len: usize,
}

impl Trace {
    pub fn new(dt: f64, start_time: f64, signals: Vec<String>, columns: Vec<Vec<Value>>) -> Result<Self, TraceError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(TraceError::InvalidStep(dt));
        }
        let len = columns.first().map(Vec::len).unwrap_or(0);
        Trace::with_len(dt, start_time, len, signals, columns)
    }

    /// Like [`Trace::new`] with an explicit length, which allows a trace
    /// without signal columns.
    pub fn with_len(
        dt: f64,
        start_time: f64,
        len: usize,
        signals: Vec<String>,
        columns: Vec<Vec<Value>>,
    ) -> Result<Self, TraceError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(TraceError::InvalidStep(dt));
        }
        for (name, col) in signals.iter().zip(&columns) {
            if col.len() != len {
                return Err(TraceError::LengthMismatch {
                    signal: name.clone(),
                    found: col.len(),
                    expected: len,
                });
            }
        }
        if len == 0 {
            return Err(TraceError::EmptyTrajectory);
        }
        check_slots(&columns)?;
        Ok(Trace {
            dt,
            start_time,
            signals,
            columns,
            len,
        })
    }

    /// Fully numeric trace from named columns.
    pub fn from_numeric(dt: f64, columns: Vec<(&str, Vec<f64>)>) -> Result<Self, TraceError> {
        let signals = columns.iter().map(|(n, _)| n.to_string()).collect();
        let cols = columns
            .into_iter()
            .map(|(_, v)| v.into_iter().map(Value::Num).collect())
            .collect();
        Trace::new(dt, 0.0, signals, cols)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn start_time(&self) -> f64 {
        self.start_time
    }

    pub fn time(&self, step: usize) -> f64 {
        self.start_time + step as f64 * self.dt
    }

    pub fn signals(&self) -> &[String] {
        &self.signals
    }

    pub fn signal_index(&self, name: &str) -> Option<usize> {
        self.signals.iter().position(|s| s == name)
    }

    pub fn column(&self, index: usize) -> &[Value] {
        &self.columns[index]
    }

    pub fn value(&self, step: usize, signal: &str) -> Result<Value, TraceError> {
        let i = self
            .signal_index(signal)
            .ok_or_else(|| TraceError::MissingSignal(signal.to_string()))?;
        Ok(self.columns[i][step])
    }

    /// Numeric value, failing on placeholders.
    pub fn numeric(&self, step: usize, signal: &str) -> Result<f64, EvalError> {
        match self.value(step, signal)? {
            Value::Num(v) => Ok(v),
            Value::Placeholder(_) => Err(EvalError::UnresolvedPlaceholder {
                signal: signal.to_string(),
                step,
            }),
        }
    }

    pub fn set(&mut self, step: usize, signal: &str, value: Value) -> Result<(), TraceError> {
        let i = self
            .signal_index(signal)
            .ok_or_else(|| TraceError::MissingSignal(signal.to_string()))?;
        self.columns[i][step] = value;
        Ok(())
    }

    /// Adds `delta` to a numeric cell, returning the edited copy.
    pub fn shifted(&self, step: usize, signal: &str, delta: f64) -> Result<Trace, EvalError> {
        let v = self.numeric(step, signal)?;
        let mut out = self.clone();
        out.set(step, signal, Value::Num(v + delta))?;
        Ok(out)
    }

    /// The prefix ending at step `k` (inclusive). Placeholder slots that
    /// survive the cut are renumbered from 0 in their old order.
    pub fn prefix(&self, k: usize) -> Trace {
        let end = (k + 1).min(self.len);
        let mut columns: Vec<Vec<Value>> = self.columns.iter().map(|c| c[..end].to_vec()).collect();
        let mut kept: Vec<usize> = columns
            .iter()
            .flatten()
            .filter_map(|v| match v {
                Value::Placeholder(s) => Some(*s),
                Value::Num(_) => None,
            })
            .collect();
        kept.sort_unstable();
        kept.dedup();
        for v in columns.iter_mut().flatten() {
            if let Value::Placeholder(s) = v {
                *s = kept.binary_search(s).expect("collected above");
            }
        }
        Trace {
            dt: self.dt,
            start_time: self.start_time,
            signals: self.signals.clone(),
            columns,
            len: end,
        }
    }

    pub fn has_placeholders(&self) -> bool {
        self.columns
            .iter()
            .any(|c| c.iter().any(|v| matches!(v, Value::Placeholder(_))))
    }

    /// Signal name of each placeholder slot, ordered by slot.
    pub fn placeholder_slots(&self) -> Vec<String> {
        let mut slots: Vec<(usize, String)> = Vec::new();
        for (name, col) in self.signals.iter().zip(&self.columns) {
            for v in col {
                if let Value::Placeholder(slot) = v {
                    if !slots.iter().any(|(s, _)| s == slot) {
                        slots.push((*slot, name.clone()));
                    }
                }
            }
        }
        slots.sort();
        slots.into_iter().map(|(_, n)| n).collect()
    }

    /// Replaces every placeholder with the assigned value.
    pub fn substitute(&self, assignment: &Assignment) -> Trace {
        let mut out = self.clone();
        for col in &mut out.columns {
            for (step, v) in col.iter_mut().enumerate() {
                if let Value::Placeholder(slot) = *v {
                    *v = Value::Num(assignment.values[step][slot]);
                }
            }
        }
        out
    }

    /// Reads a trace file. Cells may be numbers, booleans, enum literals or
    /// `null` for a placeholder.
    pub fn from_json(text: &str, registry: &SignalRegistry) -> Result<Trace, LoadError> {
        let file: TraceFile = serde_json::from_str(text)?;
        if file.schema != 1 {
            return Err(LoadError::Schema(file.schema));
        }
        let mut signals = Vec::new();
        let mut columns = Vec::new();
        let mut next_slot = 0;
        for col in file.signals {
            let mut slot = None;
            let mut values = Vec::with_capacity(col.values.len());
            for cell in &col.values {
                let v = match cell {
                    serde_json::Value::Null => {
                        let s = *slot.get_or_insert_with(|| {
                            next_slot += 1;
                            next_slot - 1
                        });
                        Value::Placeholder(s)
                    }
                    serde_json::Value::Bool(b) => Value::Num(encode_bool(*b)),
                    serde_json::Value::Number(n) => Value::Num(n.as_f64().unwrap_or(f64::NAN)),
                    serde_json::Value::String(lit) => {
                        let code = registry.enum_code(&col.name, lit).ok_or_else(|| {
                            LoadError::Invalid(format!("`{}` is not a literal of `{}`", lit, col.name))
                        })?;
                        Value::Num(code as f64)
                    }
                    other => {
                        return Err(LoadError::Invalid(format!(
                            "unsupported cell {} in `{}`",
                            other, col.name
                        )))
                    }
                };
                values.push(v);
            }
            signals.push(col.name);
            columns.push(values);
        }
        Trace::new(file.dt, file.start_time, signals, columns).map_err(|e| LoadError::Invalid(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        let file = TraceFile {
            schema: 1,
            dt: self.dt,
            start_time: self.start_time,
            signals: self
                .signals
                .iter()
                .zip(&self.columns)
                .map(|(name, col)| SignalColumn {
                    name: name.clone(),
                    values: col
                        .iter()
                        .map(|v| match v {
                            Value::Num(x) => serde_json::json!(x),
                            Value::Placeholder(_) => serde_json::Value::Null,
                        })
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("trace serializes")
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceFile {
    schema: u32,
    dt: f64,
    #[serde(default)]
    start_time: f64,
    signals: Vec<SignalColumn>,
}

/// Slots must be numbered `0..n` with each slot in a single column, so an
/// [`Assignment`] row can be indexed by slot.
fn check_slots(columns: &[Vec<Value>]) -> Result<(), TraceError> {
    let mut owner: Vec<Option<usize>> = Vec::new();
    for (col, values) in columns.iter().enumerate() {
        for v in values {
            if let Value::Placeholder(slot) = *v {
                if slot >= owner.len() {
                    owner.resize(slot + 1, None);
                }
                match owner[slot] {
                    Some(c) if c != col => return Err(TraceError::PlaceholderSlot { slot }),
                    _ => owner[slot] = Some(col),
                }
            }
        }
    }
    match owner.iter().position(Option::is_none) {
        Some(slot) => Err(TraceError::PlaceholderSlot { slot }),
        None => Ok(()),
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SignalColumn {
    name: String,
    values: Vec<serde_json::Value>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_roundtrip_with_placeholders() {
        let reg = SignalRegistry::standard();
        let text = r#"{"schema":1,"dt":2.0,"signals":[
            {"name":"speed","values":[1.0,2.0]},
            {"name":"TL(color)","values":["GREEN","red"]},
            {"name":"fogLight","values":[null,null]},
            {"name":"PriorityV(20)","values":[false,true]}]}"#;
        let t = Trace::from_json(text, &reg).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.numeric(1, "TL(color)").unwrap(), 2.0);
        assert_eq!(t.numeric(0, "PriorityV(20)").unwrap(), -1.0);
        assert_eq!(t.value(0, "fogLight").unwrap(), Value::Placeholder(0));
        assert_eq!(t.placeholder_slots(), vec!["fogLight".to_string()]);
        let back = Trace::from_json(&t.to_json(), &reg).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn schema_checked() {
        let reg = SignalRegistry::standard();
        let text = r#"{"schema":2,"dt":1.0,"signals":[]}"#;
        assert!(matches!(Trace::from_json(text, &reg), Err(LoadError::Schema(2))));
    }

    #[test]
    fn placeholder_slots_are_dense() {
        let cols = |a: Value, b: Value| vec![vec![a, Value::Num(1.0)], vec![Value::Num(1.0), b]];
        let names = vec!["fogLight".to_string(), "hornOn".to_string()];
        let gap = Trace::new(1.0, 0.0, names.clone(), cols(Value::Num(1.0), Value::Placeholder(1)));
        assert_eq!(gap, Err(TraceError::PlaceholderSlot { slot: 0 }));
        let shared = Trace::new(
            1.0,
            0.0,
            names.clone(),
            cols(Value::Placeholder(0), Value::Placeholder(0)),
        );
        assert_eq!(shared, Err(TraceError::PlaceholderSlot { slot: 0 }));

        // Slot 0 (fogLight) only appears after the cut.
        let t = Trace::new(
            1.0,
            0.0,
            names,
            vec![
                vec![Value::Num(1.0), Value::Placeholder(0)],
                vec![Value::Placeholder(1), Value::Num(1.0)],
            ],
        )
        .unwrap();
        let head = t.prefix(0);
        assert_eq!(head.value(0, "hornOn").unwrap(), Value::Placeholder(0));
        assert_eq!(head.placeholder_slots(), vec!["hornOn".to_string()]);
    }

    #[test]
    fn prefix_and_shift() {
        let t = Trace::from_numeric(1.0, vec![("x", vec![1.0, 2.0, 3.0])]).unwrap();
        assert_eq!(t.prefix(1).len(), 2);
        let s = t.shifted(2, "x", 0.5).unwrap();
        assert_eq!(s.numeric(2, "x").unwrap(), 3.5);
        assert_eq!(t.numeric(2, "x").unwrap(), 3.0);
    }
}
