//! Specification language: signals, formulas and the parser.

pub mod ast;
pub mod parser;
pub mod registry;

pub use ast::{Comparison, Formula, Interval, LinearExpr, Proposition, TRUE_ROBUSTNESS};
pub use parser::{parse_formula, parse_spec, Specification};
pub use registry::{encode_bool, SignalInfo, SignalRegistry, SignalSource, ValueKind, BOOL_FALSE, BOOL_TRUE};

/// The driving laws used by the built-in scenarios and examples.
pub const DRIVING_LAWS: &str = r#"// Red light, straight or left: stop near the line.
law38_sub3_1 = ((TL(color) == red) && (D(stopline) < 2 || D(junction) < 2) && !(direction == right)) -> (F[0,3] (speed < 0.5));
// Red light, right turn: keep moving unless someone has priority.
law38_sub3_2 = ((TL(color) == red) && (D(stopline) < 2 || D(junction) < 2) && direction == right && !PriorityV(20) && !PriorityP(20)) -> (F[0,2] (speed > 0.5));
law38_sub3 = G (law38_sub3_1 && law38_sub3_2);

// Green light: do not stall near the line when nobody has priority.
law38_sub1 = G (((TL(color) == green) && (D(stopline) < 5 || D(junction) < 5) && !PriorityV(20) && !PriorityP(20)) -> (F[0,3] (speed > 0.5)));
law38 = law38_sub1 && law38_sub3;

// Fog: fog lights and hazard flashers on.
law58_sub3 = G (fog >= 0.5 -> (fogLight && warningFlash));

// Urban speed limit, 60 km/h.
law46_sub2 = G (speed < 16.67);

// Stay inside the route lane.
law44 = G (Lane(route) < 1.2 && Lane(route) > -1.2);

laws = law38_sub3 && law58_sub3;
"#;
