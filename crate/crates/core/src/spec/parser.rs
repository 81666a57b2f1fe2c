//! Lexer and recursive-descent parser for specification files.
//!
//! Precedence, loosest first: `->` (right-assoc), `||`, `&&`, `U`, then the
//! prefix operators `!`, `G`, `F` and atoms.

use super::ast::{Comparison, Formula, Interval, LinearExpr, Proposition};
use super::registry::{SignalRegistry, ValueKind};
use crate::error::SpecError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Assign,
    Not,
    And,
    Or,
    Implies,
    Cmp(Comparison),
    Plus,
    Minus,
    Star,
    Slash,
    Always,
    Eventually,
    Until,
    Inf,
    True,
    False,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> SpecError {
    SpecError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '.'
}

fn lex(src: &str) -> Result<Vec<Token>, SpecError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let mut push = |tok: Tok, width: usize, i: &mut usize, col: &mut usize| {
            out.push(Token {
                tok,
                line: tl,
                column: tc,
            });
            *i += width;
            *col += width;
        };
        let next = chars.get(i + 1).copied();
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
            }
            '/' if next == Some('/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '(' => push(Tok::LParen, 1, &mut i, &mut col),
            ')' => push(Tok::RParen, 1, &mut i, &mut col),
            '[' => push(Tok::LBracket, 1, &mut i, &mut col),
            ']' => push(Tok::RBracket, 1, &mut i, &mut col),
            ',' => push(Tok::Comma, 1, &mut i, &mut col),
            ';' => push(Tok::Semi, 1, &mut i, &mut col),
            '+' => push(Tok::Plus, 1, &mut i, &mut col),
            '*' => push(Tok::Star, 1, &mut i, &mut col),
            '/' => push(Tok::Slash, 1, &mut i, &mut col),
            '&' if next == Some('&') => push(Tok::And, 2, &mut i, &mut col),
            '|' if next == Some('|') => push(Tok::Or, 2, &mut i, &mut col),
            '-' if next == Some('>') => push(Tok::Implies, 2, &mut i, &mut col),
            '-' => push(Tok::Minus, 1, &mut i, &mut col),
            '=' if next == Some('=') => push(Tok::Cmp(Comparison::Eq), 2, &mut i, &mut col),
            '=' => push(Tok::Assign, 1, &mut i, &mut col),
            '!' if next == Some('=') => push(Tok::Cmp(Comparison::Ne), 2, &mut i, &mut col),
            '!' => push(Tok::Not, 1, &mut i, &mut col),
            '<' if next == Some('=') => push(Tok::Cmp(Comparison::Le), 2, &mut i, &mut col),
            '<' => push(Tok::Cmp(Comparison::Lt), 1, &mut i, &mut col),
            '>' if next == Some('=') => push(Tok::Cmp(Comparison::Ge), 2, &mut i, &mut col),
            '>' => push(Tok::Cmp(Comparison::Gt), 1, &mut i, &mut col),
            '¬' => push(Tok::Not, 1, &mut i, &mut col),
            '∧' => push(Tok::And, 1, &mut i, &mut col),
            '∨' => push(Tok::Or, 1, &mut i, &mut col),
            '→' | '⇒' => push(Tok::Implies, 1, &mut i, &mut col),
            '≤' => push(Tok::Cmp(Comparison::Le), 1, &mut i, &mut col),
            '≥' => push(Tok::Cmp(Comparison::Ge), 1, &mut i, &mut col),
            '≠' => push(Tok::Cmp(Comparison::Ne), 1, &mut i, &mut col),
            '□' => push(Tok::Always, 1, &mut i, &mut col),
            '◇' | '⋄' | '♢' => push(Tok::Eventually, 1, &mut i, &mut col),
            '∞' => push(Tok::Inf, 1, &mut i, &mut col),
            c if c.is_ascii_digit() || (c == '.' && next.is_some_and(|n| n.is_ascii_digit())) => {
                let start = i;
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_digit() || chars[j] == '.') {
                    j += 1;
                }
                if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                    let mut k = j + 1;
                    if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                        k += 1;
                    }
                    if k < chars.len() && chars[k].is_ascii_digit() {
                        while k < chars.len() && chars[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                let text: String = chars[start..j].iter().collect();
                let value = text
                    .parse::<f64>()
                    .map_err(|_| syntax(tl, tc, format!("bad number `{}`", text)))?;
                push(Tok::Number(value), j - start, &mut i, &mut col);
            }
            c if is_ident_start(c) => {
                let start = i;
                let mut j = i;
                while j < chars.len() && is_ident_char(chars[j]) {
                    j += 1;
                }
                let mut text: String = chars[start..j].iter().collect();
                let keyword = matches!(text.as_str(), "G" | "F" | "U");
                // `Head(arg)` written without spaces names a single signal.
                if !keyword && j < chars.len() && chars[j] == '(' {
                    let mut k = j + 1;
                    while k < chars.len() && (chars[k].is_alphanumeric() || matches!(chars[k], '_' | '.' | '-')) {
                        k += 1;
                    }
                    if k > j + 1 && k < chars.len() && chars[k] == ')' {
                        text = chars[start..=k].iter().collect();
                        j = k + 1;
                    }
                }
                let tok = match text.as_str() {
                    "G" => Tok::Always,
                    "F" => Tok::Eventually,
                    "U" => Tok::Until,
                    "true" => Tok::True,
                    "false" => Tok::False,
                    "inf" => Tok::Inf,
                    _ => Tok::Ident(text),
                };
                push(tok, j - start, &mut i, &mut col);
            }
            other => return Err(syntax(tl, tc, format!("unexpected character `{}`", other))),
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

#[derive(Debug, Clone)]
enum TermKind {
    Const,
    Signal(String),
    Literal { name: String, line: usize, column: usize },
}

#[derive(Debug, Clone)]
struct Term {
    coeff: f64,
    kind: TermKind,
}

type Expr = Vec<Term>;

fn scale(expr: Expr, k: f64) -> Expr {
    expr.into_iter()
        .map(|t| Term {
            coeff: t.coeff * k,
            kind: t.kind,
        })
        .collect()
}

fn as_constant(expr: &Expr) -> Option<f64> {
    expr.iter()
        .map(|t| matches!(t.kind, TermKind::Const).then_some(t.coeff))
        .sum()
}

/// Named formulas parsed from a specification file.
#[derive(Debug, Clone, PartialEq)]
pub struct Specification {
    pub formulas: Vec<(String, Formula)>,
    pub top: String,
}

impl Specification {
    pub fn get(&self, name: &str) -> Option<&Formula> {
        self.formulas.iter().find(|(n, _)| n == name).map(|(_, f)| f)
    }

    pub fn top_formula(&self) -> &Formula {
        self.get(&self.top).expect("top formula is always defined")
    }

    /// Selects a different top-level formula.
    pub fn with_top(mut self, name: &str) -> Result<Self, SpecError> {
        if self.get(name).is_none() {
            return Err(SpecError::UnknownFormula(name.to_string()));
        }
        self.top = name.to_string();
        Ok(self)
    }
}

/// Parses a specification file. The formula named `laws` is the default
/// top level; without one, the last assignment is used.
pub fn parse_spec(src: &str, registry: &SignalRegistry) -> Result<Specification, SpecError> {
    let mut parser = Parser::new(src, registry)?;
    let mut formulas: Vec<(String, Formula)> = Vec::new();
    while parser.peek() != &Tok::Eof {
        let tok = parser.current().clone();
        let name = match tok.tok {
            Tok::Ident(name) => name,
            _ => return Err(syntax(tok.line, tok.column, "expected formula name")),
        };
        parser.advance();
        parser.expect(Tok::Assign, "`=`")?;
        let formula = parser.formula(&formulas)?;
        match parser.peek() {
            Tok::Semi => parser.advance(),
            Tok::Eof => {}
            _ => {
                let t = parser.current();
                return Err(syntax(t.line, t.column, "expected `;`"));
            }
        }
        formulas.retain(|(n, _)| n != &name);
        formulas.push((name, formula));
    }
    let top = if formulas.iter().any(|(n, _)| n == "laws") {
        "laws".to_string()
    } else {
        formulas.last().map(|(n, _)| n.clone()).ok_or(SpecError::Empty)?
    };
    Ok(Specification { formulas, top })
}

/// Parses a single formula expression.
pub fn parse_formula(src: &str, registry: &SignalRegistry) -> Result<Formula, SpecError> {
    let mut parser = Parser::new(src, registry)?;
    let f = parser.formula(&[])?;
    if parser.peek() != &Tok::Eof {
        let t = parser.current();
        return Err(syntax(t.line, t.column, "unexpected trailing input"));
    }
    Ok(f)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    registry: &'a SignalRegistry,
}

impl<'a> Parser<'a> {
    fn new(src: &str, registry: &'a SignalRegistry) -> Result<Self, SpecError> {
        Ok(Parser {
            tokens: lex(src)?,
            pos: 0,
            registry,
        })
    }

    fn current(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn advance(&mut self) {
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), SpecError> {
        if *self.peek() == tok {
            self.advance();
            Ok(())
        } else {
            let t = self.current();
            Err(syntax(t.line, t.column, format!("expected {}", what)))
        }
    }

    fn formula(&mut self, defs: &[(String, Formula)]) -> Result<Formula, SpecError> {
        let lhs = self.disjunction(defs)?;
        if *self.peek() == Tok::Implies {
            self.advance();
            let rhs = self.formula(defs)?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self, defs: &[(String, Formula)]) -> Result<Formula, SpecError> {
        let mut items = vec![self.conjunction(defs)?];
        while *self.peek() == Tok::Or {
            self.advance();
            items.push(self.conjunction(defs)?);
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            Formula::Or(items)
        })
    }

    fn conjunction(&mut self, defs: &[(String, Formula)]) -> Result<Formula, SpecError> {
        let mut items = vec![self.until(defs)?];
        while *self.peek() == Tok::And {
            self.advance();
            items.push(self.until(defs)?);
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            Formula::And(items)
        })
    }

    fn until(&mut self, defs: &[(String, Formula)]) -> Result<Formula, SpecError> {
        let mut lhs = self.unary(defs)?;
        while *self.peek() == Tok::Until {
            self.advance();
            let interval = self.interval()?;
            let rhs = self.unary(defs)?;
            lhs = Formula::until(lhs, rhs, interval);
        }
        Ok(lhs)
    }

    fn unary(&mut self, defs: &[(String, Formula)]) -> Result<Formula, SpecError> {
        match self.peek() {
            Tok::Not => {
                self.advance();
                Ok(Formula::not(self.unary(defs)?))
            }
            Tok::Always => {
                self.advance();
                let i = self.interval()?;
                Ok(Formula::always(self.unary(defs)?, i))
            }
            Tok::Eventually => {
                self.advance();
                let i = self.interval()?;
                Ok(Formula::eventually(self.unary(defs)?, i))
            }
            _ => self.primary(defs),
        }
    }

    fn interval(&mut self) -> Result<Interval, SpecError> {
        if *self.peek() != Tok::LBracket {
            return Ok(Interval::UNBOUNDED);
        }
        let open = self.current().clone();
        self.advance();
        let lower = self.bound(false)?;
        self.expect(Tok::Comma, "`,`")?;
        let upper = self.bound(true)?;
        self.expect(Tok::RBracket, "`]`")?;
        if lower > upper {
            return Err(SpecError::MalformedInterval {
                lower,
                upper,
                line: open.line,
                column: open.column,
            });
        }
        Ok(Interval::new(lower, upper))
    }

    fn bound(&mut self, allow_inf: bool) -> Result<f64, SpecError> {
        let t = self.current().clone();
        match t.tok {
            Tok::Number(v) => {
                self.advance();
                Ok(v)
            }
            Tok::Inf if allow_inf => {
                self.advance();
                Ok(f64::INFINITY)
            }
            _ => Err(syntax(t.line, t.column, "expected interval bound")),
        }
    }

    fn primary(&mut self, defs: &[(String, Formula)]) -> Result<Formula, SpecError> {
        let save = self.pos;
        if let Some(lhs) = self.expr(defs) {
            if let Tok::Cmp(op) = *self.peek() {
                self.advance();
                let t = self.current().clone();
                let rhs = self
                    .expr(defs)
                    .ok_or_else(|| syntax(t.line, t.column, "expected expression"))?;
                return self.proposition(lhs, op, rhs).map(Formula::Prop);
            }
        }
        self.pos = save;

        let t = self.current().clone();
        match t.tok {
            Tok::True => {
                self.advance();
                Ok(Formula::True)
            }
            Tok::False => {
                self.advance();
                Ok(Formula::False)
            }
            Tok::LParen => {
                self.advance();
                let f = self.formula(defs)?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Tok::Ident(name) => {
                self.advance();
                if let Some((_, f)) = defs.iter().find(|(n, _)| *n == name) {
                    return Ok(f.clone());
                }
                match self.registry.resolve(&name) {
                    Some(info) if info.kind == ValueKind::Boolean => Ok(Formula::Prop(Proposition::boolean(&name))),
                    Some(_) => Err(syntax(
                        t.line,
                        t.column,
                        format!("signal `{}` is not boolean and needs a comparison", name),
                    )),
                    None => Err(SpecError::UnknownSignal {
                        name,
                        line: t.line,
                        column: t.column,
                    }),
                }
            }
            _ => Err(syntax(t.line, t.column, "expected formula")),
        }
    }

    /// Linear arithmetic expression. `None` means the tokens do not form one,
    /// and the caller backtracks.
    fn expr(&mut self, defs: &[(String, Formula)]) -> Option<Expr> {
        let mut acc = self.term(defs)?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.advance();
                    acc.extend(self.term(defs)?);
                }
                Tok::Minus => {
                    self.advance();
                    acc.extend(scale(self.term(defs)?, -1.0));
                }
                _ => return Some(acc),
            }
        }
    }

    fn term(&mut self, defs: &[(String, Formula)]) -> Option<Expr> {
        let mut acc = self.factor(defs)?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.advance();
                    let rhs = self.factor(defs)?;
                    acc = match (as_constant(&acc), as_constant(&rhs)) {
                        (Some(k), _) => scale(rhs, k),
                        (_, Some(k)) => scale(acc, k),
                        _ => return None,
                    };
                }
                Tok::Slash => {
                    self.advance();
                    let rhs = self.factor(defs)?;
                    let k = as_constant(&rhs)?;
                    acc = scale(acc, 1.0 / k);
                }
                _ => return Some(acc),
            }
        }
    }

    fn factor(&mut self, defs: &[(String, Formula)]) -> Option<Expr> {
        let t = self.current().clone();
        match t.tok {
            Tok::Number(v) => {
                self.advance();
                Some(vec![Term {
                    coeff: v,
                    kind: TermKind::Const,
                }])
            }
            Tok::Minus => {
                self.advance();
                Some(scale(self.factor(defs)?, -1.0))
            }
            Tok::Plus => {
                self.advance();
                self.factor(defs)
            }
            Tok::LParen => {
                self.advance();
                let e = self.expr(defs)?;
                if *self.peek() != Tok::RParen {
                    return None;
                }
                self.advance();
                Some(e)
            }
            Tok::Ident(name) => {
                if defs.iter().any(|(n, _)| *n == name) {
                    return None;
                }
                self.advance();
                let kind = if self.registry.resolve(&name).is_some() {
                    TermKind::Signal(name)
                } else {
                    TermKind::Literal {
                        name,
                        line: t.line,
                        column: t.column,
                    }
                };
                Some(vec![Term { coeff: 1.0, kind }])
            }
            _ => None,
        }
    }

    fn proposition(&self, lhs: Expr, op: Comparison, rhs: Expr) -> Result<Proposition, SpecError> {
        let all: Vec<Term> = lhs.into_iter().chain(scale(rhs, -1.0)).collect();
        let mut enum_signals: Vec<String> = Vec::new();
        for t in &all {
            if let TermKind::Signal(name) = &t.kind {
                let is_enum = matches!(
                    self.registry.resolve(name).map(|s| s.kind),
                    Some(ValueKind::Enum { .. })
                );
                if is_enum && !enum_signals.contains(name) {
                    enum_signals.push(name.clone());
                }
            }
        }
        let mut expr = LinearExpr::default();
        for t in all {
            match t.kind {
                TermKind::Const => expr.constant += t.coeff,
                TermKind::Signal(name) => expr.terms.push((name, t.coeff)),
                TermKind::Literal { name, line, column } => {
                    if enum_signals.len() != 1 {
                        return Err(SpecError::UnknownSignal { name, line, column });
                    }
                    let signal = &enum_signals[0];
                    let code = self
                        .registry
                        .enum_code(signal, &name)
                        .ok_or_else(|| SpecError::UnknownEnumLiteral {
                            signal: signal.clone(),
                            literal: name.clone(),
                            line,
                            column,
                        })?;
                    expr.constant += t.coeff * code as f64;
                }
            }
        }
        Ok(Proposition::new(expr, op))
    }
}
