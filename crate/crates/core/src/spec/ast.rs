//! Formula tree and its printer.

use std::fmt;

/// Robustness of the `true` literal. A large finite value keeps the smooth
/// operators well defined.
pub const TRUE_ROBUSTNESS: f64 = 1e6;

/// Closed time interval in seconds; `upper` may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub const UNBOUNDED: Interval = Interval {
        lower: 0.0,
        upper: f64::INFINITY,
    };

    pub fn new(lower: f64, upper: f64) -> Self {
        Interval { lower, upper }
    }

    /// Step offsets covered by the interval for a trace sampled every `dt`
    /// seconds. Bounds are rounded half-up; `None` means unbounded.
    pub fn steps(&self, dt: f64) -> (usize, Option<usize>) {
        let lo = round_half_up(self.lower / dt);
        let hi = if self.upper.is_finite() {
            Some(round_half_up(self.upper / dt))
        } else {
            None
        };
        (lo, hi)
    }
}

fn round_half_up(x: f64) -> usize {
    // Guard against 2.9999999 style artefacts from the division.
    (x + 0.5 + 1e-9).floor().max(0.0) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Comparison {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl Comparison {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparison::Lt => "<",
            Comparison::Le => "<=",
            Comparison::Gt => ">",
            Comparison::Ge => ">=",
            Comparison::Eq => "==",
            Comparison::Ne => "!=",
        }
    }

    /// Robustness of `value ∼ 0`.
    pub fn robustness(self, value: f64) -> f64 {
        match self {
            Comparison::Lt | Comparison::Le => -value,
            Comparison::Gt | Comparison::Ge => value,
            Comparison::Ne => value.abs(),
            Comparison::Eq => -value.abs(),
        }
    }
}

/// `Σ coeff·signal + constant`, with terms sorted by signal name.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearExpr {
    pub terms: Vec<(String, f64)>,
    pub constant: f64,
}

impl LinearExpr {
    pub fn signal(name: &str) -> Self {
        LinearExpr {
            terms: vec![(name.to_string(), 1.0)],
            constant: 0.0,
        }
    }

    pub fn constant(value: f64) -> Self {
        LinearExpr {
            terms: Vec::new(),
            constant: value,
        }
    }

    /// Merges duplicate signals, drops zero coefficients and sorts.
    pub fn normalized(mut self) -> Self {
        self.terms.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(String, f64)> = Vec::with_capacity(self.terms.len());
        for (name, c) in self.terms {
            match merged.last_mut() {
                Some(last) if last.0 == name => last.1 += c,
                _ => merged.push((name, c)),
            }
        }
        merged.retain(|(_, c)| *c != 0.0);
        self.terms = merged;
        self
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        for t in &mut self.terms {
            t.1 *= factor;
        }
        self.constant *= factor;
        self
    }

    pub fn plus(mut self, other: LinearExpr) -> Self {
        self.terms.extend(other.terms);
        self.constant += other.constant;
        self.normalized()
    }

    pub fn evaluate(&self, mut lookup: impl FnMut(&str) -> f64) -> f64 {
        self.terms
            .iter()
            .fold(self.constant, |acc, (name, c)| acc + c * lookup(name))
    }
}

/// Atomic predicate `expr ∼ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposition {
    pub expr: LinearExpr,
    pub op: Comparison,
}

impl Proposition {
    pub fn new(expr: LinearExpr, op: Comparison) -> Self {
        Proposition {
            expr: expr.normalized(),
            op,
        }
    }

    /// Boolean signal used as an atom: `signal > 0`.
    pub fn boolean(signal: &str) -> Self {
        Proposition::new(LinearExpr::signal(signal), Comparison::Gt)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    True,
    False,
    Prop(Proposition),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Until(Box<Formula>, Box<Formula>, Interval),
    Eventually(Box<Formula>, Interval),
    Always(Box<Formula>, Interval),
}

impl Formula {
    pub fn prop(expr: LinearExpr, op: Comparison) -> Self {
        Formula::Prop(Proposition::new(expr, op))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn implies(lhs: Formula, rhs: Formula) -> Self {
        Formula::Or(vec![Formula::not(lhs), rhs])
    }

    pub fn until(lhs: Formula, rhs: Formula, interval: Interval) -> Self {
        Formula::Until(Box::new(lhs), Box::new(rhs), interval)
    }

    pub fn eventually(f: Formula, interval: Interval) -> Self {
        Formula::Eventually(Box::new(f), interval)
    }

    pub fn always(f: Formula, interval: Interval) -> Self {
        Formula::Always(Box::new(f), interval)
    }

    /// Rewrites `F_I φ` as `true U_I φ` and `G_I φ` as `¬F_I ¬φ`.
    pub fn desugar(&self) -> Formula {
        match self {
            Formula::True | Formula::False | Formula::Prop(_) => self.clone(),
            Formula::Not(f) => Formula::not(f.desugar()),
            Formula::And(fs) => Formula::And(fs.iter().map(Formula::desugar).collect()),
            Formula::Or(fs) => Formula::Or(fs.iter().map(Formula::desugar).collect()),
            Formula::Until(a, b, i) => Formula::until(a.desugar(), b.desugar(), *i),
            Formula::Eventually(f, i) => Formula::until(Formula::True, f.desugar(), *i),
            Formula::Always(f, i) => Formula::not(Formula::until(Formula::True, Formula::not(f.desugar()), *i)),
        }
    }

    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::True | Formula::False | Formula::Prop(_) => Vec::new(),
            Formula::Not(f) | Formula::Eventually(f, _) | Formula::Always(f, _) => vec![f],
            Formula::And(fs) | Formula::Or(fs) => fs.iter().collect(),
            Formula::Until(a, b, _) => vec![a, b],
        }
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    pub fn is_temporal(&self) -> bool {
        matches!(self, Formula::Until(..) | Formula::Eventually(..) | Formula::Always(..))
    }

    /// True if no temporal operator occurs anywhere in the tree.
    pub fn is_state_formula(&self) -> bool {
        !self.is_temporal() && self.children().iter().all(|c| c.is_state_formula())
    }

    /// Signals in order of first appearance.
    pub fn signals(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_signals(&mut out);
        out
    }

    fn collect_signals(&self, out: &mut Vec<String>) {
        if let Formula::Prop(p) = self {
            for (name, _) in &p.expr.terms {
                if !out.contains(name) {
                    out.push(name.clone());
                }
            }
        }
        for c in self.children() {
            c.collect_signals(out);
        }
    }

    pub fn mentions(&self, signal: &str) -> bool {
        match self {
            Formula::Prop(p) => p.expr.terms.iter().any(|(n, _)| n == signal),
            _ => self.children().iter().any(|c| c.mentions(signal)),
        }
    }
}

fn fmt_number(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        format!("{}", v)
    }
}

fn fmt_interval(i: &Interval) -> String {
    format!("[{},{}]", fmt_number(i.lower), fmt_number(i.upper))
}

impl fmt::Display for LinearExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (name, c) in &self.terms {
            let (sign, mag) = if *c < 0.0 { ("-", -c) } else { ("+", *c) };
            if first {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", sign)?;
            }
            if mag == 1.0 {
                write!(f, "{}", name)?;
            } else {
                write!(f, "{}*{}", fmt_number(mag), name)?;
            }
            first = false;
        }
        if first {
            write!(f, "{}", fmt_number(self.constant))
        } else if self.constant < 0.0 {
            write!(f, " - {}", fmt_number(-self.constant))
        } else if self.constant > 0.0 {
            write!(f, " + {}", fmt_number(self.constant))
        } else {
            Ok(())
        }
    }
}

impl fmt::Display for Proposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} 0", self.expr, self.op.symbol())
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let joined = |fs: &[Formula], op: &str| fs.iter().map(|c| format!("({})", c)).collect::<Vec<_>>().join(op);
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Prop(p) => write!(f, "{}", p),
            Formula::Not(c) => write!(f, "!({})", c),
            Formula::And(fs) => write!(f, "{}", joined(fs, " && ")),
            Formula::Or(fs) => write!(f, "{}", joined(fs, " || ")),
            Formula::Until(a, b, i) => write!(f, "({}) U{} ({})", a, fmt_interval(i), b),
            Formula::Eventually(c, i) => write!(f, "F{} ({})", fmt_interval(i), c),
            Formula::Always(c, i) => write!(f, "G{} ({})", fmt_interval(i), c),
        }
    }
}
