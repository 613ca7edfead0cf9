//! Coefficient mini-language: parsing and evaluation of the functions
//! `p(x)`, `q(x)`, `r(x)` used to define problems in text files.
//!
//! Grammar (standard precedence, `^` right-associative and binding
//! tighter than unary minus):
//!
//! ```text
//! expr    := term (('+'|'-') term)*
//! term    := unary (('*'|'/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?
//! atom    := number | 'x' | 'pi' | func '(' expr ')' | '(' expr ')'
//! func    := sin | cos | tan | exp | log | sqrt | sinh | cosh | abs
//! ```
//!
//! Numbers are ordinary floating-point literals (`2`, `0.5`, `1e-3`).
//! Evaluation is pure; domain violations (`log` of a non-positive
//! number, `sqrt` of a negative number, division by zero, or any
//! non-finite intermediate) are reported as errors instead of letting
//! NaN propagate.

use crate::error::{Error, Result};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
    Abs,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Abs => "abs",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "abs" => Func::Abs,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Ast {
    Num(f64),
    Var,
    Pi,
    Neg(Box<Ast>),
    Add(Box<Ast>, Box<Ast>),
    Sub(Box<Ast>, Box<Ast>),
    Mul(Box<Ast>, Box<Ast>),
    Div(Box<Ast>, Box<Ast>),
    Pow(Box<Ast>, Box<Ast>),
    Call(Func, Box<Ast>),
}

/// A parsed, immutable coefficient expression in the variable `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffExpr {
    ast: Ast,
}

impl CoeffExpr {
    /// Parse `text`; errors carry 0-based byte offsets.
    pub fn parse(text: &str) -> Result<CoeffExpr> {
        parse_expr(text)
    }

    /// Evaluate at `x`. Pure: two calls with the same `x` agree bitwise.
    pub fn eval(&self, x: f64) -> Result<f64> {
        eval_ast(&self.ast, x)
    }

    pub fn ast(&self) -> &Ast {
        &self.ast
    }

    /// A constant expression (used for built-in flat references).
    pub fn constant(v: f64) -> CoeffExpr {
        CoeffExpr { ast: Ast::Num(v) }
    }

    /// True if the expression evaluates to zero (within `tol`) at every
    /// point of a dense sample of `[a, b]`. A cheap identically-zero test.
    pub fn is_zero_on(&self, a: f64, b: f64, tol: f64) -> bool {
        let n = 257;
        for i in 0..n {
            let x = a + (b - a) * (i as f64 + 0.5) / n as f64;
            match self.eval(x) {
                Ok(v) if v.abs() <= tol => {}
                _ => return false,
            }
        }
        true
    }
}

/// Parse an expression; see the module docs for the grammar.
pub fn parse_expr(text: &str) -> Result<CoeffExpr> {
    let mut p = Parser {
        bytes: text.as_bytes(),
        pos: 0,
    };
    p.skip_ws();
    let ast = p.parse_sum()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(Error::Syntax {
            offset: p.pos,
            expected: "end of input or an operator (+ - * / ^)".into(),
        });
    }
    Ok(CoeffExpr { ast })
}

/// Evaluate a parsed expression at `x`.
pub fn eval_expr(e: &CoeffExpr, x: f64) -> Result<f64> {
    e.eval(x)
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn parse_sum(&mut self) -> Result<Ast> {
        let mut lhs = self.parse_term()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let rhs = self.parse_term()?;
                    lhs = Ast::Add(Box::new(lhs), Box::new(rhs));
                }
                Some(b'-') => {
                    self.pos += 1;
                    let rhs = self.parse_term()?;
                    lhs = Ast::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_term(&mut self) -> Result<Ast> {
        let mut lhs = self.parse_unary()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let rhs = self.parse_unary()?;
                    lhs = Ast::Mul(Box::new(lhs), Box::new(rhs));
                }
                Some(b'/') => {
                    self.pos += 1;
                    let rhs = self.parse_unary()?;
                    lhs = Ast::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_unary(&mut self) -> Result<Ast> {
        self.skip_ws();
        if self.peek() == Some(b'-') {
            self.pos += 1;
            let inner = self.parse_unary()?;
            return Ok(Ast::Neg(Box::new(inner)));
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<Ast> {
        let base = self.parse_atom()?;
        self.skip_ws();
        if self.peek() == Some(b'^') {
            self.pos += 1;
            // right-associative; the exponent may carry a unary minus
            let exponent = self.parse_unary()?;
            return Ok(Ast::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn parse_atom(&mut self) -> Result<Ast> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.parse_sum()?;
                self.skip_ws();
                if self.peek() == Some(b')') {
                    self.pos += 1;
                    Ok(inner)
                } else {
                    Err(Error::Syntax {
                        offset: self.pos,
                        expected: "')'".into(),
                    })
                }
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.parse_number(),
            Some(c) if c.is_ascii_alphabetic() => self.parse_ident(),
            _ => Err(Error::Syntax {
                offset: self.pos,
                expected: "a number, 'x', 'pi', a function name, '(' or unary '-'".into(),
            }),
        }
    }

    fn parse_number(&mut self) -> Result<Ast> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() || c == b'.' {
                self.pos += 1;
            } else if (c == b'e' || c == b'E') && self.pos > start {
                // exponent part: e, e+, e- followed by digits
                let mut probe = self.pos + 1;
                if let Some(&s) = self.bytes.get(probe) {
                    if s == b'+' || s == b'-' {
                        probe += 1;
                    }
                }
                if self.bytes.get(probe).is_some_and(|d| d.is_ascii_digit()) {
                    self.pos = probe + 1;
                    while self.peek().is_some_and(|d| d.is_ascii_digit()) {
                        self.pos += 1;
                    }
                }
                break;
            } else {
                break;
            }
        }
        let slice = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        slice.parse::<f64>().map(Ast::Num).map_err(|_| Error::Syntax {
            offset: start,
            expected: "a numeric literal".into(),
        })
    }

    fn parse_ident(&mut self) -> Result<Ast> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        match name {
            "x" => Ok(Ast::Var),
            "pi" => Ok(Ast::Pi),
            _ => {
                if let Some(f) = Func::from_name(name) {
                    self.skip_ws();
                    if self.peek() == Some(b'(') {
                        self.pos += 1;
                        let arg = self.parse_sum()?;
                        self.skip_ws();
                        if self.peek() == Some(b')') {
                            self.pos += 1;
                            Ok(Ast::Call(f, Box::new(arg)))
                        } else {
                            Err(Error::Syntax {
                                offset: self.pos,
                                expected: "')'".into(),
                            })
                        }
                    } else {
                        Err(Error::Syntax {
                            offset: self.pos,
                            expected: format!("'(' after function name `{name}`"),
                        })
                    }
                } else {
                    Err(Error::UnknownIdentifier {
                        name: name.into(),
                        offset: start,
                    })
                }
            }
        }
    }
}

fn finite(func: &'static str, arg: f64, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain { func, arg })
    }
}

fn eval_ast(ast: &Ast, x: f64) -> Result<f64> {
    Ok(match ast {
        Ast::Num(v) => *v,
        Ast::Var => x,
        Ast::Pi => std::f64::consts::PI,
        Ast::Neg(a) => -eval_ast(a, x)?,
        Ast::Add(a, b) => finite("add", x, eval_ast(a, x)? + eval_ast(b, x)?)?,
        Ast::Sub(a, b) => finite("sub", x, eval_ast(a, x)? - eval_ast(b, x)?)?,
        Ast::Mul(a, b) => finite("mul", x, eval_ast(a, x)? * eval_ast(b, x)?)?,
        Ast::Div(a, b) => {
            let d = eval_ast(b, x)?;
            if d == 0.0 {
                return Err(Error::Domain { func: "div", arg: d });
            }
            finite("div", d, eval_ast(a, x)? / d)?
        }
        Ast::Pow(a, b) => {
            let base = eval_ast(a, x)?;
            let exponent = eval_ast(b, x)?;
            let v = base.powf(exponent);
            if v.is_nan() {
                return Err(Error::Domain { func: "pow", arg: base });
            }
            finite("pow", base, v)?
        }
        Ast::Call(f, a) => {
            let v = eval_ast(a, x)?;
            match f {
                Func::Sin => v.sin(),
                Func::Cos => v.cos(),
                Func::Tan => finite("tan", v, v.tan())?,
                Func::Exp => finite("exp", v, v.exp())?,
                Func::Log => {
                    if v <= 0.0 {
                        return Err(Error::Domain { func: "log", arg: v });
                    }
                    v.ln()
                }
                Func::Sqrt => {
                    if v < 0.0 {
                        return Err(Error::Domain { func: "sqrt", arg: v });
                    }
                    v.sqrt()
                }
                Func::Sinh => finite("sinh", v, v.sinh())?,
                Func::Cosh => finite("cosh", v, v.cosh())?,
                Func::Abs => v.abs(),
            }
        }
    })
}

// Printing uses precedence levels so parse(print(e)) recovers an
// equivalent tree.
fn prec(ast: &Ast) -> u8 {
    match ast {
        Ast::Add(..) | Ast::Sub(..) => 1,
        Ast::Mul(..) | Ast::Div(..) => 2,
        Ast::Neg(..) => 3,
        Ast::Pow(..) => 4,
        _ => 5,
    }
}

fn fmt_ast(ast: &Ast, f: &mut fmt::Formatter<'_>, parent: u8, rhs: bool) -> fmt::Result {
    let me = prec(ast);
    let needs_paren = me < parent || (me == parent && rhs && me <= 2);
    if needs_paren {
        write!(f, "(")?;
    }
    match ast {
        Ast::Num(v) => {
            if *v < 0.0 {
                // negative literals print parenthesized so that the token
                // stream stays unambiguous in any context
                write!(f, "({v})")?;
            } else {
                write!(f, "{v}")?;
            }
        }
        Ast::Var => write!(f, "x")?,
        Ast::Pi => write!(f, "pi")?,
        Ast::Neg(a) => {
            write!(f, "-")?;
            fmt_ast(a, f, 3, true)?;
        }
        Ast::Add(a, b) => {
            fmt_ast(a, f, 1, false)?;
            write!(f, " + ")?;
            fmt_ast(b, f, 1, true)?;
        }
        Ast::Sub(a, b) => {
            fmt_ast(a, f, 1, false)?;
            write!(f, " - ")?;
            fmt_ast(b, f, 1, true)?;
        }
        Ast::Mul(a, b) => {
            fmt_ast(a, f, 2, false)?;
            write!(f, "*")?;
            fmt_ast(b, f, 2, true)?;
        }
        Ast::Div(a, b) => {
            fmt_ast(a, f, 2, false)?;
            write!(f, "/")?;
            fmt_ast(b, f, 2, true)?;
        }
        Ast::Pow(a, b) => {
            // base binds tighter than ^; exponent is a unary expression
            fmt_ast(a, f, 5, false)?;
            write!(f, "^")?;
            fmt_ast(b, f, 4, true)?;
        }
        Ast::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            fmt_ast(a, f, 0, false)?;
            write!(f, ")")?;
        }
    }
    if needs_paren {
        write!(f, ")")?;
    }
    Ok(())
}

impl fmt::Display for CoeffExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_ast(&self.ast, f, 0, false)
    }
}

/// Advisory report of the standing assumptions on `(p, q, r)`:
/// positivity of `p` and `r`, integrability of `1/p`, `r`, `|q|`, and a
/// finite-difference smoothness heuristic for `p*r` and `(p*r)'/r`.
/// A report never rejects a problem; it only flags violations.
#[derive(Debug, Clone, serde::Serialize)]
pub struct HypothesisReport {
    pub p_positive: bool,
    pub r_positive: bool,
    pub inv_p_integrable: bool,
    pub r_integrable: bool,
    pub q_abs_integrable: bool,
    pub pr_smooth: bool,
    pub pr_prime_over_r_smooth: bool,
    pub inv_p_integral: f64,
    pub r_integral: f64,
    pub q_abs_integral: f64,
    pub notes: Vec<String>,
}

impl HypothesisReport {
    /// All checks needed for the basic assumptions (positivity and the
    /// three integrability conditions).
    pub fn basic_ok(&self) -> bool {
        self.p_positive
            && self.r_positive
            && self.inv_p_integrable
            && self.r_integrable
            && self.q_abs_integrable
    }

    /// Additionally the smoothness heuristics used for large-z
    /// asymptotics.
    pub fn smooth_ok(&self) -> bool {
        self.basic_ok() && self.pr_smooth && self.pr_prime_over_r_smooth
    }
}

/// Integrand-magnitude threshold beyond which an integral is flagged as
/// divergent by the sampling heuristic.
const DIVERGENCE_THRESHOLD: f64 = 1e8;

/// Sample the coefficients on a dense grid (`n` interior points plus a
/// geometric refinement towards both endpoints) and report on the
/// standing assumptions. "a.e." conditions cannot be decided from
/// samples, so everything here is a heuristic.
pub fn check_hypothesis(
    p: &CoeffExpr,
    q: &CoeffExpr,
    r: &CoeffExpr,
    a: f64,
    b: f64,
    n: usize,
) -> HypothesisReport {
    let n = n.max(16);
    let h = (b - a) / n as f64;
    let mut xs: Vec<f64> = (0..n).map(|i| a + (i as f64 + 0.5) * h).collect();
    // geometric refinement towards the endpoints down to ~1e-12*(b-a),
    // so that non-integrable endpoint singularities show up as huge
    // integrand samples
    let mut off = 0.25 * h;
    while off > 1e-12 * (b - a) {
        xs.push(a + off);
        xs.push(b - off);
        off *= 0.5;
    }

    let mut rep = HypothesisReport {
        p_positive: true,
        r_positive: true,
        inv_p_integrable: true,
        r_integrable: true,
        q_abs_integrable: true,
        pr_smooth: true,
        pr_prime_over_r_smooth: true,
        inv_p_integral: 0.0,
        r_integral: 0.0,
        q_abs_integral: 0.0,
        notes: Vec::new(),
    };

    let mut max_inv_p: f64 = 0.0;
    let mut max_r: f64 = 0.0;
    let mut max_q: f64 = 0.0;
    for &x in &xs {
        match p.eval(x) {
            Ok(v) => {
                if v <= 0.0 {
                    rep.p_positive = false;
                } else {
                    max_inv_p = max_inv_p.max(1.0 / v);
                }
            }
            Err(e) => {
                rep.p_positive = false;
                rep.notes.push(format!("p({x}): {e}"));
            }
        }
        match r.eval(x) {
            Ok(v) => {
                if v <= 0.0 {
                    rep.r_positive = false;
                } else {
                    max_r = max_r.max(v);
                }
            }
            Err(e) => {
                rep.r_positive = false;
                rep.notes.push(format!("r({x}): {e}"));
            }
        }
        match q.eval(x) {
            Ok(v) => max_q = max_q.max(v.abs()),
            Err(e) => {
                rep.q_abs_integrable = false;
                rep.notes.push(format!("q({x}): {e}"));
            }
        }
    }

    // midpoint quadrature on the uniform part of the grid
    let quad = |f: &dyn Fn(f64) -> Option<f64>| -> Option<f64> {
        let mut s = 0.0;
        for i in 0..n {
            let x = a + (i as f64 + 0.5) * h;
            s += f(x)?;
        }
        Some(s * h)
    };
    rep.inv_p_integral = quad(&|x| p.eval(x).ok().map(|v| if v != 0.0 { 1.0 / v } else { f64::INFINITY }))
        .unwrap_or(f64::INFINITY);
    rep.r_integral = quad(&|x| r.eval(x).ok()).unwrap_or(f64::INFINITY);
    rep.q_abs_integral = quad(&|x| q.eval(x).ok().map(f64::abs)).unwrap_or(f64::INFINITY);

    rep.inv_p_integrable = rep.inv_p_integral.is_finite()
        && rep.inv_p_integral.abs() < DIVERGENCE_THRESHOLD
        && max_inv_p < DIVERGENCE_THRESHOLD;
    rep.r_integrable = rep.r_integral.is_finite() && max_r < DIVERGENCE_THRESHOLD;
    rep.q_abs_integrable =
        rep.q_abs_integrable && rep.q_abs_integral.is_finite() && max_q < DIVERGENCE_THRESHOLD;

    // smoothness heuristic: a jump shows up as one first difference far
    // above the local median scale
    let uniform: Vec<f64> = (0..n).map(|i| a + (i as f64 + 0.5) * h).collect();
    let pr: Option<Vec<f64>> = uniform
        .iter()
        .map(|&x| match (p.eval(x), r.eval(x)) {
            (Ok(pv), Ok(rv)) => Some(pv * rv),
            _ => None,
        })
        .collect();
    if let Some(pr) = pr {
        rep.pr_smooth = differences_look_continuous(&pr);
        // (pr)'/r by central differences on the same grid
        let mut dpr_over_r = Vec::with_capacity(n.saturating_sub(2));
        for i in 1..n - 1 {
            let d = (pr[i + 1] - pr[i - 1]) / (2.0 * h);
            match r.eval(uniform[i]) {
                Ok(rv) if rv != 0.0 => dpr_over_r.push(d / rv),
                _ => {
                    rep.pr_prime_over_r_smooth = false;
                    break;
                }
            }
        }
        if rep.pr_prime_over_r_smooth {
            rep.pr_prime_over_r_smooth = differences_look_continuous(&dpr_over_r);
        }
    } else {
        rep.pr_smooth = false;
        rep.pr_prime_over_r_smooth = false;
    }

    rep
}

fn differences_look_continuous(v: &[f64]) -> bool {
    if v.len() < 8 {
        return true;
    }
    let mut diffs: Vec<f64> = v.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let max = diffs.iter().cloned().fold(0.0, f64::max);
    diffs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = diffs[diffs.len() / 2];
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    // continuous samples have max difference comparable to the median;
    // a jump concentrates O(scale) into a single difference
    max <= (50.0 * median).max(1e-6 * scale)
}


#[cfg(test)]
mod prop_tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_ast(depth: u32) -> BoxedStrategy<Ast> {
        if depth == 0 {
            prop_oneof![
                (-5.0..5.0f64).prop_map(Ast::Num),
                Just(Ast::Var),
                Just(Ast::Pi),
            ]
            .boxed()
        } else {
            let sub = arb_ast(depth - 1);
            prop_oneof![
                (-5.0..5.0f64).prop_map(Ast::Num),
                Just(Ast::Var),
                (sub.clone(), arb_ast(depth - 1))
                    .prop_map(|(a, b)| Ast::Add(Box::new(a), Box::new(b))),
                (sub.clone(), arb_ast(depth - 1))
                    .prop_map(|(a, b)| Ast::Sub(Box::new(a), Box::new(b))),
                (sub.clone(), arb_ast(depth - 1))
                    .prop_map(|(a, b)| Ast::Mul(Box::new(a), Box::new(b))),
                (sub.clone(), arb_ast(depth - 1))
                    .prop_map(|(a, b)| Ast::Div(Box::new(a), Box::new(b))),
                sub.clone().prop_map(|a| Ast::Neg(Box::new(a))),
                sub.clone().prop_map(|a| Ast::Call(Func::Sin, Box::new(a))),
                sub.clone().prop_map(|a| Ast::Call(Func::Cos, Box::new(a))),
                sub.clone().prop_map(|a| Ast::Call(Func::Abs, Box::new(a))),
                sub.prop_map(|a| Ast::Call(Func::Exp, Box::new(a))),
            ]
            .boxed()
        }
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(ast in arb_ast(4)) {
            let original = CoeffExpr { ast };
            let printed = original.to_string();
            let reparsed = CoeffExpr::parse(&printed).unwrap();
            for i in 0..50 {
                let x = -2.0 + 4.0 * (i as f64 + 0.5) / 50.0;
                match (original.eval(x), reparsed.eval(x)) {
                    (Ok(a), Ok(b)) =>
                        prop_assert!((a - b).abs() <= 1e-14 * a.abs().max(1.0),
                            "{} vs {} at x={} for `{}`", a, b, x, printed),
                    (Err(_), Err(_)) => {}
                    _ => prop_assert!(false, "eval disagreement for `{}`", printed),
                }
            }
        }
    }
}
