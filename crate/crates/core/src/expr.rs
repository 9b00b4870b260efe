//! Small expression language used for metric entries, map components and
//! structure tensors.
//!
//! Grammar:
//! ```text
//! expr  := term (('+'|'-') term)*
//! term  := unary (('*'|'/') unary)*
//! unary := '-'? power
//! power := atom ('^' unary)?
//! atom  := number | const | var | func '(' expr ')' | '(' expr ')'
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Exp => v.exp(),
            Func::Log => {
                if v > 0.0 {
                    v.ln()
                } else {
                    f64::NAN
                }
            }
            Func::Sqrt => v.sqrt(),
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tan => v.tan(),
            Func::Sinh => v.sinh(),
            Func::Cosh => v.cosh(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    Var(usize),
    Neg(Arc<Node>),
    Add(Arc<Node>, Arc<Node>),
    Sub(Arc<Node>, Arc<Node>),
    Mul(Arc<Node>, Arc<Node>),
    Div(Arc<Node>, Arc<Node>),
    Pow(Arc<Node>, Arc<Node>),
    Call(Func, Arc<Node>),
}

/// Names visible to the parser: a variable prefix (`x` gives `x1`, `x2`, ...)
/// and named numeric parameters.
#[derive(Debug, Clone)]
pub struct Scope {
    pub prefix: String,
    pub params: BTreeMap<String, f64>,
    /// Highest admissible variable index (1-based), if bounded.
    pub max_index: Option<usize>,
}

impl Default for Scope {
    fn default() -> Self {
        Scope::new("x")
    }
}

impl Scope {
    pub fn new(prefix: &str) -> Self {
        Scope {
            prefix: prefix.to_string(),
            params: BTreeMap::new(),
            max_index: None,
        }
    }

    pub fn with_dim(mut self, n: usize) -> Self {
        self.max_index = Some(n);
        self
    }

    pub fn with_params(mut self, params: &BTreeMap<String, f64>) -> Self {
        self.params = params.clone();
        self
    }

    fn variable(&self, name: &str) -> Option<usize> {
        let rest = name.strip_prefix(self.prefix.as_str())?;
        if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) || rest.starts_with('0') {
            return None;
        }
        let k: usize = rest.parse().ok()?;
        match self.max_index {
            Some(n) if k > n => None,
            _ => Some(k - 1),
        }
    }
}

/// A parsed expression. Cheap to clone.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Arc<Node>,
}

/// Parse with the default scope: variables `x1, x2, ...`, no parameters.
pub fn parse_expression(text: &str) -> Result<Expression> {
    parse_in(text, &Scope::default())
}

pub fn parse_in(text: &str, scope: &Scope) -> Result<Expression> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        scope,
    };
    let root = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.syntax("unexpected trailing input"));
    }
    Ok(Expression { root })
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    scope: &'a Scope,
}

impl<'a> Parser<'a> {
    fn syntax(&self, message: &str) -> Error {
        Error::Syntax {
            offset: self.pos,
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

    fn expr(&mut self) -> Result<Arc<Node>> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Arc::new(Node::Add(lhs, rhs));
                }
                Some(b'-') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Arc::new(Node::Sub(lhs, rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Arc<Node>> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    lhs = Arc::new(Node::Mul(lhs, rhs));
                }
                Some(b'/') => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    lhs = Arc::new(Node::Div(lhs, rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Arc<Node>> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            let inner = self.power()?;
            return Ok(neg(inner));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Arc<Node>> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Arc::new(Node::Pow(base, exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Arc<Node>> {
        match self.peek() {
            None => Err(self.syntax("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.syntax("expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(_) => Err(self.syntax("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<Arc<Node>> {
        let start = self.pos;
        let s = self.src;
        while self.pos < s.len() && s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos < s.len() && s[self.pos] == b'.' {
            self.pos += 1;
            while self.pos < s.len() && s[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        if self.pos < s.len() && (s[self.pos] == b'e' || s[self.pos] == b'E') {
            let mut q = self.pos + 1;
            if q < s.len() && (s[q] == b'+' || s[q] == b'-') {
                q += 1;
            }
            if q < s.len() && s[q].is_ascii_digit() {
                while q < s.len() && s[q].is_ascii_digit() {
                    q += 1;
                }
                self.pos = q;
            }
        }
        let text = std::str::from_utf8(&s[start..self.pos]).unwrap_or("");
        text.parse::<f64>()
            .map(|v| Arc::new(Node::Const(v)))
            .map_err(|_| Error::Syntax {
                offset: start,
                message: format!("malformed number `{text}`"),
            })
    }

    fn ident(&mut self) -> Result<Arc<Node>> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        if let Some(f) = Func::from_name(name) {
            if self.peek() != Some(b'(') {
                return Err(self.syntax("expected '(' after function name"));
            }
            self.pos += 1;
            let arg = self.expr()?;
            match self.peek() {
                Some(b')') => {
                    self.pos += 1;
                    Ok(Arc::new(Node::Call(f, arg)))
                }
                Some(b',') => Err(Error::Arity {
                    name: name.to_string(),
                    offset: start,
                }),
                _ => Err(self.syntax("expected ')'")),
            }
        } else if self.peek() == Some(b'(') {
            Err(Error::UnknownIdentifier {
                name: name.to_string(),
                offset: start,
            })
        } else if let Some(k) = self.scope.variable(name) {
            Ok(Arc::new(Node::Var(k)))
        } else if let Some(v) = self.scope.params.get(name) {
            Ok(Arc::new(Node::Const(*v)))
        } else if name == "pi" {
            Ok(Arc::new(Node::Const(std::f64::consts::PI)))
        } else if name == "e" {
            Ok(Arc::new(Node::Const(std::f64::consts::E)))
        } else {
            Err(Error::UnknownIdentifier {
                name: name.to_string(),
                offset: start,
            })
        }
    }
}

fn eval_node(node: &Node, x: &[f64]) -> f64 {
    match node {
        Node::Const(c) => *c,
        Node::Var(k) => x.get(*k).copied().unwrap_or(f64::NAN),
        Node::Neg(a) => -eval_node(a, x),
        Node::Add(a, b) => eval_node(a, x) + eval_node(b, x),
        Node::Sub(a, b) => eval_node(a, x) - eval_node(b, x),
        Node::Mul(a, b) => eval_node(a, x) * eval_node(b, x),
        Node::Div(a, b) => {
            let d = eval_node(b, x);
            if d == 0.0 {
                f64::NAN
            } else {
                eval_node(a, x) / d
            }
        }
        Node::Pow(a, b) => {
            let base = eval_node(a, x);
            let e = eval_node(b, x);
            if e.fract() == 0.0 && e.abs() <= 64.0 {
                base.powi(e as i32)
            } else {
                base.powf(e)
            }
        }
        Node::Call(f, a) => f.apply(eval_node(a, x)),
    }
}

fn uses(node: &Node, var: usize) -> bool {
    match node {
        Node::Const(_) => false,
        Node::Var(k) => *k == var,
        Node::Neg(a) | Node::Call(_, a) => uses(a, var),
        Node::Add(a, b)
        | Node::Sub(a, b)
        | Node::Mul(a, b)
        | Node::Div(a, b)
        | Node::Pow(a, b) => uses(a, var) || uses(b, var),
    }
}

fn max_var(node: &Node) -> Option<usize> {
    match node {
        Node::Const(_) => None,
        Node::Var(k) => Some(*k),
        Node::Neg(a) | Node::Call(_, a) => max_var(a),
        Node::Add(a, b)
        | Node::Sub(a, b)
        | Node::Mul(a, b)
        | Node::Div(a, b)
        | Node::Pow(a, b) => match (max_var(a), max_var(b)) {
            (Some(p), Some(q)) => Some(p.max(q)),
            (p, q) => p.or(q),
        },
    }
}

fn as_const(n: &Node) -> Option<f64> {
    match n {
        Node::Const(c) => Some(*c),
        _ => None,
    }
}

fn konst(c: f64) -> Arc<Node> {
    Arc::new(Node::Const(c))
}

fn neg(a: Arc<Node>) -> Arc<Node> {
    match &*a {
        Node::Const(c) => konst(-c),
        Node::Neg(inner) => inner.clone(),
        _ => Arc::new(Node::Neg(a)),
    }
}

fn add(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
    match (as_const(&a), as_const(&b)) {
        (Some(p), Some(q)) => konst(p + q),
        (Some(p), _) if p == 0.0 => b,
        (_, Some(q)) if q == 0.0 => a,
        _ => Arc::new(Node::Add(a, b)),
    }
}

fn sub(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
    match (as_const(&a), as_const(&b)) {
        (Some(p), Some(q)) => konst(p - q),
        (Some(p), _) if p == 0.0 => neg(b),
        (_, Some(q)) if q == 0.0 => a,
        _ => Arc::new(Node::Sub(a, b)),
    }
}

fn mul(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
    match (as_const(&a), as_const(&b)) {
        (Some(p), Some(q)) => konst(p * q),
        (Some(p), _) | (_, Some(p)) if p == 0.0 => konst(0.0),
        (Some(p), _) if p == 1.0 => b,
        (_, Some(q)) if q == 1.0 => a,
        (Some(p), _) if p == -1.0 => neg(b),
        (_, Some(q)) if q == -1.0 => neg(a),
        _ => Arc::new(Node::Mul(a, b)),
    }
}

fn div(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
    match (as_const(&a), as_const(&b)) {
        (Some(p), Some(q)) if q != 0.0 => konst(p / q),
        (Some(p), _) if p == 0.0 => konst(0.0),
        (_, Some(q)) if q == 1.0 => a,
        _ => Arc::new(Node::Div(a, b)),
    }
}

fn pow(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
    match as_const(&b) {
        Some(q) if q == 0.0 => konst(1.0),
        Some(q) if q == 1.0 => a,
        _ => Arc::new(Node::Pow(a, b)),
    }
}

fn call(f: Func, a: Arc<Node>) -> Arc<Node> {
    Arc::new(Node::Call(f, a))
}

fn derive(node: &Arc<Node>, var: usize) -> Arc<Node> {
    if !uses(node, var) {
        return konst(0.0);
    }
    match &**node {
        Node::Const(_) => konst(0.0),
        Node::Var(_) => konst(1.0),
        Node::Neg(a) => neg(derive(a, var)),
        Node::Add(a, b) => add(derive(a, var), derive(b, var)),
        Node::Sub(a, b) => sub(derive(a, var), derive(b, var)),
        Node::Mul(a, b) => add(
            mul(derive(a, var), b.clone()),
            mul(a.clone(), derive(b, var)),
        ),
        Node::Div(a, b) => {
            let da = derive(a, var);
            let db = derive(b, var);
            if as_const(&db) == Some(0.0) {
                div(da, b.clone())
            } else {
                div(
                    sub(mul(da, b.clone()), mul(a.clone(), db)),
                    pow(b.clone(), konst(2.0)),
                )
            }
        }
        Node::Pow(a, b) => {
            if !uses(b, var) {
                // d(u^c) = c u^(c-1) du, with c possibly an expression free of var
                let c_minus_1 = sub(b.clone(), konst(1.0));
                mul(mul(b.clone(), pow(a.clone(), c_minus_1)), derive(a, var))
            } else if !uses(a, var) {
                mul(
                    mul(node.clone(), call(Func::Log, a.clone())),
                    derive(b, var),
                )
            } else {
                let t1 = mul(derive(b, var), call(Func::Log, a.clone()));
                let t2 = div(mul(b.clone(), derive(a, var)), a.clone());
                mul(node.clone(), add(t1, t2))
            }
        }
        Node::Call(f, a) => {
            let da = derive(a, var);
            let outer = match f {
                Func::Exp => node.clone(),
                Func::Log => div(konst(1.0), a.clone()),
                Func::Sqrt => div(konst(0.5), node.clone()),
                Func::Sin => call(Func::Cos, a.clone()),
                Func::Cos => neg(call(Func::Sin, a.clone())),
                Func::Tan => div(konst(1.0), pow(call(Func::Cos, a.clone()), konst(2.0))),
                Func::Sinh => call(Func::Cosh, a.clone()),
                Func::Cosh => call(Func::Sinh, a.clone()),
            };
            mul(outer, da)
        }
    }
}

impl Expression {
    pub fn constant(c: f64) -> Self {
        Expression { root: konst(c) }
    }

    /// Evaluate at `x`; non-finite results become `DomainViolation`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let v = eval_node(&self.root, x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::DomainViolation(format!(
                "`{self}` is undefined at {x:?}"
            )))
        }
    }

    /// Raw evaluation without the finiteness check.
    pub fn eval_raw(&self, x: &[f64]) -> f64 {
        eval_node(&self.root, x)
    }

    /// Partial derivative with respect to variable `var` (0-based).
    pub fn derivative(&self, var: usize) -> Expression {
        Expression {
            root: derive(&self.root, var),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(*self.root, Node::Const(_))
    }

    pub fn as_constant(&self) -> Option<f64> {
        as_const(&self.root)
    }

    pub fn is_zero(&self) -> bool {
        self.as_constant() == Some(0.0)
    }

    pub fn depends_on(&self, var: usize) -> bool {
        uses(&self.root, var)
    }

    /// Largest variable index referenced (0-based).
    pub fn max_variable(&self) -> Option<usize> {
        max_var(&self.root)
    }
}

fn prec(n: &Node) -> u8 {
    match n {
        Node::Add(..) | Node::Sub(..) => 1,
        Node::Mul(..) | Node::Div(..) => 2,
        Node::Neg(..) => 3,
        Node::Pow(..) => 4,
        _ => 5,
    }
}

fn write_node(f: &mut fmt::Formatter<'_>, n: &Node) -> fmt::Result {
    let wrap = |f: &mut fmt::Formatter<'_>, child: &Node, min: u8| -> fmt::Result {
        if prec(child) < min {
            write!(f, "(")?;
            write_node(f, child)?;
            write!(f, ")")
        } else {
            write_node(f, child)
        }
    };
    match n {
        Node::Const(c) => {
            if *c < 0.0 {
                write!(f, "({c:?})")
            } else {
                write!(f, "{c:?}")
            }
        }
        Node::Var(k) => write!(f, "x{}", k + 1),
        Node::Neg(a) => {
            write!(f, "-")?;
            wrap(f, a, 4)
        }
        Node::Add(a, b) => {
            wrap(f, a, 1)?;
            write!(f, " + ")?;
            wrap(f, b, 2)
        }
        Node::Sub(a, b) => {
            wrap(f, a, 1)?;
            write!(f, " - ")?;
            wrap(f, b, 2)
        }
        Node::Mul(a, b) => {
            wrap(f, a, 2)?;
            write!(f, "*")?;
            wrap(f, b, 3)
        }
        Node::Div(a, b) => {
            wrap(f, a, 2)?;
            write!(f, "/")?;
            wrap(f, b, 4)
        }
        Node::Pow(a, b) => {
            wrap(f, a, 5)?;
            write!(f, "^")?;
            wrap(f, b, 4)
        }
        Node::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_node(f, a)?;
            write!(f, ")")
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(f, &self.root)
    }
}
