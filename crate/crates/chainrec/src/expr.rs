//! A small text DSL for generator maps over one complex variable.
//!
//! Grammar:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := atom ('^' uint)?
//! atom   := 'z' | number | 'i' | '(' expr ')'
//! ```
//!
//! Numbers are decimal literals. Only polynomial maps are expressible:
//! division and transcendental functions are rejected at parse time, which is
//! what guarantees that box evaluation stays a sound enclosure everywhere.
//!
//! Parsing folds constant subexpressions and turns `real * expr` into a
//! dedicated scale node, so `parse(print(e))` reproduces `e` structurally.

use crate::interval::{pow_point, IntervalBox2};
use num_complex::Complex64;
use std::fmt;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    /// The variable `z`.
    Var,
    /// A complex constant (`i` parses to `Const(0+1i)`).
    Const(Complex64),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    /// Power with a nonnegative integer exponent. `Pow(e, 0)` is the constant 1.
    Pow(Box<Expr>, u32),
    /// Multiplication by an exact real scalar.
    Scale(f64, Box<Expr>),
}

/// A parsed, immutable generator map. Evaluable exactly on points and
/// rigorously on boxes.
#[derive(Clone, Debug, PartialEq)]
pub struct MapExpr {
    root: Expr,
}

#[derive(Debug, Error, PartialEq)]
#[error("parse error at byte {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

impl MapExpr {
    pub fn parse(source: &str) -> Result<MapExpr, ParseError> {
        parse_map_expr(source)
    }

    pub fn from_root(root: Expr) -> MapExpr {
        MapExpr { root }
    }

    pub fn root(&self) -> &Expr {
        &self.root
    }
}

/// Parse a generator-map definition. Whitespace-insensitive.
pub fn parse_map_expr(source: &str) -> Result<MapExpr, ParseError> {
    let mut p = Parser {
        src: source.as_bytes(),
        pos: 0,
    };
    p.skip_ws();
    if p.pos >= p.src.len() {
        return Err(p.err("empty expression"));
    }
    let root = p.parse_expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.err_at(p.pos, &format!("unexpected `{}`", p.src[p.pos] as char)));
    }
    Ok(MapExpr { root })
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, message: &str) -> ParseError {
        self.err_at(self.pos, message)
    }

    fn err_at(&self, offset: usize, message: &str) -> ParseError {
        ParseError {
            offset,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn parse_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    let op_at = self.pos;
                    self.pos += 1;
                    let rhs = self.parse_term()?;
                    lhs = fold_add(lhs, rhs).map_err(|m| self.err_at(op_at, &m))?;
                }
                Some(b'-') => {
                    let op_at = self.pos;
                    self.pos += 1;
                    let rhs = self.parse_term()?;
                    lhs = fold_sub(lhs, rhs).map_err(|m| self.err_at(op_at, &m))?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    let op_at = self.pos;
                    self.pos += 1;
                    let rhs = self.parse_factor()?;
                    lhs = fold_mul(lhs, rhs).map_err(|m| self.err_at(op_at, &m))?;
                }
                Some(b'/') => {
                    return Err(self.err("division is not supported (maps must be polynomial)"));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.parse_atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.parse_exponent()?;
            return fold_pow(base, exp).map_err(|m| self.err(&m));
        }
        Ok(base)
    }

    fn parse_exponent(&mut self) -> Result<u32, ParseError> {
        self.skip_ws();
        let start = self.pos;
        if self.peek() == Some(b'-') {
            return Err(self.err("exponent must be a nonnegative integer"));
        }
        let mut digits = String::new();
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            digits.push(self.src[self.pos] as char);
            self.pos += 1;
        }
        if digits.is_empty() {
            return Err(self.err_at(start, "exponent must be a nonnegative integer"));
        }
        if self.pos < self.src.len() && matches!(self.src[self.pos], b'.' | b'e' | b'E') {
            return Err(self.err_at(start, "exponent must be a nonnegative integer"));
        }
        digits
            .parse::<u32>()
            .map_err(|_| self.err_at(start, "exponent out of range"))
    }

    fn parse_atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.err("expected expression")),
            Some(b'(') => {
                let open_at = self.pos;
                self.pos += 1;
                let inner = self.parse_expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err_at(open_at, "unclosed parenthesis"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.parse_number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                let mut ident = String::new();
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    ident.push(self.src[self.pos] as char);
                    self.pos += 1;
                }
                match ident.as_str() {
                    "z" => Ok(Expr::Var),
                    "i" => Ok(Expr::Const(Complex64::new(0.0, 1.0))),
                    _ => Err(self.err_at(start, &format!("unknown identifier `{ident}`"))),
                }
            }
            Some(c) => Err(self.err(&format!("unexpected `{}`", c as char))),
        }
    }

    fn parse_number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let mut s = String::new();
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            s.push(self.src[self.pos] as char);
            self.pos += 1;
        }
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            s.push('.');
            self.pos += 1;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                s.push(self.src[self.pos] as char);
                self.pos += 1;
            }
        }
        if self.pos < self.src.len() && matches!(self.src[self.pos], b'e' | b'E') {
            s.push('e');
            self.pos += 1;
            if self.pos < self.src.len() && matches!(self.src[self.pos], b'+' | b'-') {
                s.push(self.src[self.pos] as char);
                self.pos += 1;
            }
            let exp_digits_start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                s.push(self.src[self.pos] as char);
                self.pos += 1;
            }
            if self.pos == exp_digits_start {
                return Err(self.err_at(start, "malformed number literal"));
            }
        }
        if s.is_empty() || s == "." {
            return Err(self.err_at(start, "malformed number literal"));
        }
        let value: f64 = s
            .parse()
            .map_err(|_| self.err_at(start, "malformed number literal"))?;
        if !value.is_finite() {
            return Err(self.err_at(start, "number literal overflows"));
        }
        Ok(Expr::Const(Complex64::new(value, 0.0)))
    }
}

fn finite_const(c: Complex64) -> Result<Expr, String> {
    if c.re.is_finite() && c.im.is_finite() {
        Ok(Expr::Const(c))
    } else {
        Err("constant folding overflows".to_string())
    }
}

fn fold_add(a: Expr, b: Expr) -> Result<Expr, String> {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => finite_const(x + y),
        (a, b) => Ok(Expr::Add(Box::new(a), Box::new(b))),
    }
}

fn fold_sub(a: Expr, b: Expr) -> Result<Expr, String> {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => finite_const(x - y),
        (a, b) => Ok(Expr::Sub(Box::new(a), Box::new(b))),
    }
}

fn fold_mul(a: Expr, b: Expr) -> Result<Expr, String> {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => finite_const(x * y),
        (Expr::Const(x), e) if x.im == 0.0 => Ok(Expr::Scale(x.re, Box::new(e))),
        (e, Expr::Const(x)) if x.im == 0.0 => Ok(Expr::Scale(x.re, Box::new(e))),
        (a, b) => Ok(Expr::Mul(Box::new(a), Box::new(b))),
    }
}

fn fold_pow(base: Expr, k: u32) -> Result<Expr, String> {
    match base {
        Expr::Const(c) => finite_const(pow_point(c, k)),
        e => Ok(Expr::Pow(Box::new(e), k)),
    }
}

/// Exact floating evaluation of the map at a point.
pub fn eval_point(e: &MapExpr, p: Complex64) -> Complex64 {
    eval_pt(&e.root, p)
}

fn eval_pt(e: &Expr, p: Complex64) -> Complex64 {
    match e {
        Expr::Var => p,
        Expr::Const(c) => *c,
        Expr::Add(a, b) => eval_pt(a, p) + eval_pt(b, p),
        Expr::Sub(a, b) => eval_pt(a, p) - eval_pt(b, p),
        Expr::Mul(a, b) => eval_pt(a, p) * eval_pt(b, p),
        Expr::Pow(a, k) => pow_point(eval_pt(a, p), *k),
        Expr::Scale(s, a) => eval_pt(a, p).scale(*s),
    }
}

/// Rigorous image enclosure: the returned box contains `{e(p) : p in b}`.
pub fn eval_box(e: &MapExpr, b: &IntervalBox2) -> IntervalBox2 {
    eval_bx(&e.root, b)
}

fn eval_bx(e: &Expr, b: &IntervalBox2) -> IntervalBox2 {
    match e {
        Expr::Var => *b,
        Expr::Const(c) => IntervalBox2::point(*c),
        Expr::Add(x, y) => eval_bx(x, b).add(&eval_bx(y, b)),
        Expr::Sub(x, y) => eval_bx(x, b).sub(&eval_bx(y, b)),
        Expr::Mul(x, y) => eval_bx(x, b).mul(&eval_bx(y, b)),
        Expr::Pow(x, k) => eval_bx(x, b).pow(*k),
        Expr::Scale(s, x) => eval_bx(x, b).scale(*s),
    }
}

// --- printing ----------------------------------------------------------

// Precedence levels used by the printer: 0 additive, 1 multiplicative,
// 2 power, 3 atom.
fn fmt_prec(e: &Expr, ctx: u8, out: &mut String) {
    let level = expr_level(e);
    let need_parens = level < ctx;
    if need_parens {
        out.push('(');
    }
    match e {
        Expr::Var => out.push('z'),
        Expr::Const(c) => fmt_const(*c, out),
        Expr::Add(a, b) => {
            fmt_prec(a, 0, out);
            out.push_str(" + ");
            fmt_prec(b, 1, out);
        }
        Expr::Sub(a, b) => {
            fmt_prec(a, 0, out);
            out.push_str(" - ");
            fmt_prec(b, 1, out);
        }
        Expr::Mul(a, b) => {
            fmt_prec(a, 1, out);
            out.push_str(" * ");
            fmt_prec(b, 2, out);
        }
        Expr::Pow(a, k) => {
            fmt_prec(a, 3, out);
            out.push('^');
            out.push_str(&k.to_string());
        }
        Expr::Scale(s, a) => {
            if *s < 0.0 {
                out.push_str("(0 - ");
                fmt_real(-*s, out);
                out.push(')');
            } else {
                fmt_real(*s, out);
            }
            out.push_str(" * ");
            fmt_prec(a, 2, out);
        }
    }
    if need_parens {
        out.push(')');
    }
}

fn expr_level(e: &Expr) -> u8 {
    match e {
        Expr::Var => 3,
        Expr::Const(c) => const_level(*c),
        Expr::Add(..) | Expr::Sub(..) => 0,
        Expr::Mul(..) | Expr::Scale(..) => 1,
        Expr::Pow(..) => 2,
    }
}

fn const_level(c: Complex64) -> u8 {
    if c.im == 0.0 {
        if c.re >= 0.0 {
            3
        } else {
            0 // printed as 0 - x
        }
    } else if c.re == 0.0 && c.im == 1.0 {
        3 // bare i
    } else if c.re == 0.0 && c.im > 0.0 {
        1 // b*i
    } else {
        0 // full additive form
    }
}

// There is no unary minus in the grammar, so negative parts print as `0 - x`.
fn fmt_const(c: Complex64, out: &mut String) {
    if c.im == 0.0 {
        fmt_real_signed(c.re, out);
    } else if c.re == 0.0 {
        fmt_imag_signed(c.im, out);
    } else {
        fmt_real_signed(c.re, out);
        if c.im > 0.0 {
            out.push_str(" + ");
            fmt_imag(c.im, out);
        } else {
            out.push_str(" - ");
            fmt_imag(-c.im, out);
        }
    }
}

fn fmt_real_signed(x: f64, out: &mut String) {
    if x >= 0.0 || x == 0.0 {
        fmt_real(x, out);
    } else {
        out.push_str("0 - ");
        fmt_real(-x, out);
    }
}

fn fmt_imag_signed(b: f64, out: &mut String) {
    if b > 0.0 {
        fmt_imag(b, out);
    } else {
        out.push_str("0 - ");
        fmt_imag(-b, out);
    }
}

fn fmt_imag(b: f64, out: &mut String) {
    debug_assert!(b > 0.0);
    if b == 1.0 {
        out.push('i');
    } else {
        fmt_real(b, out);
        out.push_str("*i");
    }
}

fn fmt_real(x: f64, out: &mut String) {
    if x == 0.0 {
        out.push('0'); // normalizes -0.0, which would print as "-0"
    } else {
        out.push_str(&format!("{x}"));
    }
}

impl fmt::Display for MapExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        fmt_prec(&self.root, 0, &mut s);
        f.write_str(&s)
    }
}
