//! Scalar fields `u: G -> R ∪ {+inf}` and the built-in field catalog.

use std::fmt;

use crate::error::{usage, Result};
use crate::group::{GroupModel, GroupPoint, HorizontalVector};

/// An extended-valued function on a Carnot group. `eval` may return
/// `f64::INFINITY` but never `-inf` or NaN.
pub trait ScalarField: Send + Sync {
    fn eval(&self, g: &GroupPoint) -> f64;

    /// Symbolic horizontal gradient `(X_1 u, X_2 u)`, when known.
    fn grad(&self, _g: &GroupPoint) -> Option<HorizontalVector> {
        None
    }

    fn label(&self) -> String {
        "field".to_string()
    }
}

/// Horizontal gradient of the `k`-th exponential coordinate, read off the
/// left-invariant frames
/// `X_1 = d_x - y/2 d_t - (t/2 + xy/12) d_s`, `X_2 = d_y + x/2 d_t + x^2/12 d_s`.
pub fn coordinate_gradient(g: &GroupPoint, k: usize) -> HorizontalVector {
    let c = g.coords();
    match k {
        0 => HorizontalVector::new(1.0, 0.0),
        1 => HorizontalVector::new(0.0, 1.0),
        2 => HorizontalVector::new(-c[1] / 2.0, c[0] / 2.0),
        3 => HorizontalVector::new(-(c[2] / 2.0 + c[0] * c[1] / 12.0), c[0] * c[0] / 12.0),
        _ => panic!("coordinate index {k} out of range"),
    }
}

/// Fields addressable by name.
#[derive(Debug, Clone, PartialEq)]
pub enum BuiltinField {
    Const(f64),
    /// `k ||xi_1(g)||^2`; `sq_v1` is `k = 1`, `neg_sq_v1` is `k = -1`.
    ScaledSqV1(f64),
    /// `||xi_1(g)||^4`.
    QuarticV1,
    /// `<xi_1(g), v> + offset`.
    Linear {
        v: HorizontalVector,
        offset: f64,
    },
    Coord(usize),
    /// `0` where `max{x, y} <= 0`, `+inf` elsewhere.
    MaxXyIndicator,
    /// `0` where `t <= 0`, `+inf` elsewhere.
    TNonposIndicator,
    Poly(Polynomial),
}

impl BuiltinField {
    /// Resolves a catalog name: `sq_v1[:k]`, `neg_sq_v1`, `quartic_v1`,
    /// `linear:a,b`, `coord:k` (index or coordinate name), `const:c`,
    /// `max_xy_indicator`, `t_nonpos_indicator`, `poly:<expr>`.
    pub fn parse(spec: &str, model: GroupModel) -> Result<Self> {
        let spec = spec.trim();
        let (head, arg) = match spec.split_once(':') {
            Some((h, a)) => (h.trim(), Some(a.trim())),
            None => (spec, None),
        };
        let number = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| usage(format!("invalid number '{s}' in field '{spec}'")))
        };
        let field = match (head, arg) {
            ("sq_v1", None) => BuiltinField::ScaledSqV1(1.0),
            ("sq_v1", Some(k)) => BuiltinField::ScaledSqV1(number(k)?),
            ("neg_sq_v1", None) => BuiltinField::ScaledSqV1(-1.0),
            ("quartic_v1", None) => BuiltinField::QuarticV1,
            ("const", None) => BuiltinField::Const(0.0),
            ("const", Some(c)) => BuiltinField::Const(number(c)?),
            ("linear", Some(v)) => {
                let parts: Vec<&str> = v
                    .split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .collect();
                if parts.len() != 2 {
                    return Err(usage(format!("linear field needs two components, got '{v}'")));
                }
                BuiltinField::Linear {
                    v: HorizontalVector::new(number(parts[0])?, number(parts[1])?),
                    offset: 0.0,
                }
            }
            ("coord", Some(k)) => {
                let names = model.coordinate_names();
                let idx = match names.iter().position(|n| *n == k) {
                    Some(i) => i,
                    None => k
                        .parse::<usize>()
                        .map_err(|_| usage(format!("unknown coordinate '{k}' for {model}")))?,
                };
                if idx >= model.topological_dim() {
                    return Err(usage(format!("coordinate {idx} out of range for {model}")));
                }
                BuiltinField::Coord(idx)
            }
            ("max_xy_indicator", None) => BuiltinField::MaxXyIndicator,
            ("t_nonpos_indicator", None) => BuiltinField::TNonposIndicator,
            ("poly", Some(expr)) => BuiltinField::Poly(Polynomial::parse(expr, model)?),
            _ => return Err(usage(format!("unknown field '{spec}'"))),
        };
        Ok(field)
    }
}

impl ScalarField for BuiltinField {
    fn eval(&self, g: &GroupPoint) -> f64 {
        let c = g.coords();
        match self {
            BuiltinField::Const(v) => *v,
            BuiltinField::ScaledSqV1(k) => k * g.horizontal().norm_sq(),
            BuiltinField::QuarticV1 => g.horizontal().norm_sq().powi(2),
            BuiltinField::Linear { v, offset } => g.horizontal().dot(v) + offset,
            BuiltinField::Coord(k) => c[*k],
            BuiltinField::MaxXyIndicator => {
                if c[0].max(c[1]) <= 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            BuiltinField::TNonposIndicator => {
                if c[2] <= 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            BuiltinField::Poly(p) => p.eval(c),
        }
    }

    fn grad(&self, g: &GroupPoint) -> Option<HorizontalVector> {
        match self {
            BuiltinField::Const(_) => Some(HorizontalVector::ZERO),
            BuiltinField::ScaledSqV1(k) => Some(g.horizontal() * (2.0 * k)),
            BuiltinField::QuarticV1 => {
                let a = g.horizontal();
                Some(a * (4.0 * a.norm_sq()))
            }
            BuiltinField::Linear { v, .. } => Some(*v),
            BuiltinField::Coord(k) => Some(coordinate_gradient(g, *k)),
            _ => None,
        }
    }

    fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for BuiltinField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuiltinField::Const(c) => write!(f, "const:{c}"),
            BuiltinField::ScaledSqV1(k) if *k == 1.0 => write!(f, "sq_v1"),
            BuiltinField::ScaledSqV1(k) if *k == -1.0 => write!(f, "neg_sq_v1"),
            BuiltinField::ScaledSqV1(k) => write!(f, "sq_v1:{k}"),
            BuiltinField::QuarticV1 => write!(f, "quartic_v1"),
            BuiltinField::Linear { v, offset } if *offset == 0.0 => write!(f, "linear:{},{}", v.0[0], v.0[1]),
            BuiltinField::Linear { v, offset } => write!(f, "linear:{},{}+{offset}", v.0[0], v.0[1]),
            BuiltinField::Coord(k) => write!(f, "coord:{k}"),
            BuiltinField::MaxXyIndicator => write!(f, "max_xy_indicator"),
            BuiltinField::TNonposIndicator => write!(f, "t_nonpos_indicator"),
            BuiltinField::Poly(p) => write!(f, "poly:{}", p.source),
        }
    }
}

/// A field defined by closures, optionally with a symbolic gradient.
pub struct FnField<F, G = fn(&GroupPoint) -> HorizontalVector> {
    label: String,
    f: F,
    grad: Option<G>,
}

impl<F> FnField<F>
where
    F: Fn(&GroupPoint) -> f64 + Send + Sync,
{
    pub fn new(label: impl Into<String>, f: F) -> Self {
        FnField {
            label: label.into(),
            f,
            grad: None,
        }
    }
}

impl<F, G> FnField<F, G>
where
    F: Fn(&GroupPoint) -> f64 + Send + Sync,
    G: Fn(&GroupPoint) -> HorizontalVector + Send + Sync,
{
    pub fn with_grad(label: impl Into<String>, f: F, grad: G) -> Self {
        FnField {
            label: label.into(),
            f,
            grad: Some(grad),
        }
    }
}

impl<F, G> ScalarField for FnField<F, G>
where
    F: Fn(&GroupPoint) -> f64 + Send + Sync,
    G: Fn(&GroupPoint) -> HorizontalVector + Send + Sync,
{
    fn eval(&self, g: &GroupPoint) -> f64 {
        (self.f)(g)
    }

    fn grad(&self, g: &GroupPoint) -> Option<HorizontalVector> {
        self.grad.as_ref().map(|d| d(g))
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

/// `u + k ||xi_1||^2`, the shift relating semiconvexity to convexity.
pub struct ShiftedBySqV1<'a> {
    pub base: &'a dyn ScalarField,
    pub k: f64,
}

impl ScalarField for ShiftedBySqV1<'_> {
    fn eval(&self, g: &GroupPoint) -> f64 {
        self.base.eval(g) + self.k * g.horizontal().norm_sq()
    }

    fn grad(&self, g: &GroupPoint) -> Option<HorizontalVector> {
        self.base.grad(g).map(|d| d + g.horizontal() * (2.0 * self.k))
    }

    fn label(&self) -> String {
        format!("{} + {}|xi1|^2", self.base.label(), self.k)
    }
}

/// A polynomial (more precisely, a rational expression with real powers)
/// over the exponential coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    source: String,
    root: Expr,
}

#[derive(Debug, Clone, PartialEq)]
enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Bin(Op, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl Polynomial {
    pub fn parse(source: &str, model: GroupModel) -> Result<Self> {
        let mut p = ExprParser {
            chars: source.chars().collect(),
            pos: 0,
            names: model.coordinate_names(),
        };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos != p.chars.len() {
            return Err(usage(format!(
                "unexpected '{}' at offset {} in '{source}'",
                p.chars[p.pos], p.pos
            )));
        }
        Ok(Polynomial {
            source: source.to_string(),
            root,
        })
    }

    pub fn eval(&self, coords: &[f64]) -> f64 {
        eval_expr(&self.root, coords)
    }
}

fn eval_expr(e: &Expr, c: &[f64]) -> f64 {
    match e {
        Expr::Num(v) => *v,
        Expr::Var(i) => c[*i],
        Expr::Neg(a) => -eval_expr(a, c),
        Expr::Bin(op, a, b) => {
            let (a, b) = (eval_expr(a, c), eval_expr(b, c));
            match op {
                Op::Add => a + b,
                Op::Sub => a - b,
                Op::Mul => a * b,
                Op::Div => a / b,
                Op::Pow => {
                    if b.fract() == 0.0 && b.abs() <= i32::MAX as f64 {
                        a.powi(b as i32)
                    } else {
                        a.powf(b)
                    }
                }
            }
        }
    }
}

struct ExprParser<'a> {
    chars: Vec<char>,
    pos: usize,
    names: &'a [&'a str],
}

impl ExprParser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(c @ ('+' | '-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if c == '+' { Op::Add } else { Op::Sub };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(c @ ('*' | '/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if c == '*' { Op::Mul } else { Op::Div };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    // unary minus binds looser than '^': -x^2 = -(x^2)
    fn unary(&mut self) -> Result<Expr> {
        if self.peek() == Some('-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.peek() == Some('+') {
            self.pos += 1;
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.peek() == Some('^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Bin(Op::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(usage("missing ')' in expression"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => {
                let start = self.pos;
                while self.pos < self.chars.len() {
                    let c = self.chars[self.pos];
                    let exp_sign =
                        (c == '-' || c == '+') && self.pos > start && matches!(self.chars[self.pos - 1], 'e' | 'E');
                    if c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E' || exp_sign {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                let text: String = self.chars[start..self.pos].iter().collect();
                text.parse::<f64>()
                    .map(Expr::Num)
                    .map_err(|_| usage(format!("invalid number '{text}'")))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let name: String = self.chars[start..self.pos].iter().collect();
                self.names
                    .iter()
                    .position(|n| *n == name)
                    .map(Expr::Var)
                    .ok_or_else(|| usage(format!("unknown variable '{name}'")))
            }
            Some(c) => Err(usage(format!("unexpected '{c}' in expression"))),
            None => Err(usage("unexpected end of expression")),
        }
    }
}
