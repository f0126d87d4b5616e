use std::fmt;

use num_complex::Complex64;

/// Syntax tree of an entire function of `z`.
///
/// Division is only by constant sub-trees and `log`/`sqrt` only take constant
/// arguments; the parser and the smart constructors keep it that way.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// Non-negative real literal.
    Num(f64),
    Pi,
    I,
    Z,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Exp(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Log(Box<Expr>),
    Sqrt(Box<Expr>),
}

use Expr::*;

impl Expr {
    pub fn num(x: f64) -> Expr {
        if x < 0.0 {
            Neg(Box::new(Num(-x)))
        } else {
            Num(x)
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Num(_) | Pi | I => true,
            Z => false,
            Neg(a) | Exp(a) | Sin(a) | Cos(a) | Log(a) | Sqrt(a) => a.is_constant(),
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) => a.is_constant() && b.is_constant(),
        }
    }

    fn is_zero(&self) -> bool {
        matches!(self, Num(x) if *x == 0.0)
    }

    fn is_one(&self) -> bool {
        matches!(self, Num(x) if *x == 1.0)
    }

    /// Value of a constant sub-tree.
    pub fn constant_value(&self) -> Option<Complex64> {
        if !self.is_constant() {
            return None;
        }
        Some(eval_tree(self, Complex64::new(0.0, 0.0)))
    }

    /// Exact symbolic derivative with respect to `z`.
    pub fn derivative(&self) -> Expr {
        match self {
            Num(_) | Pi | I | Log(_) | Sqrt(_) => Num(0.0),
            Z => Num(1.0),
            Neg(a) => neg(a.derivative()),
            Add(a, b) => add(a.derivative(), b.derivative()),
            Sub(a, b) => sub(a.derivative(), b.derivative()),
            Mul(a, b) => add(mul(a.derivative(), (**b).clone()), mul((**a).clone(), b.derivative())),
            Div(a, b) => div(a.derivative(), (**b).clone()),
            Exp(a) => mul(a.derivative(), Exp(a.clone())),
            Sin(a) => mul(a.derivative(), Cos(a.clone())),
            Cos(a) => neg(mul(a.derivative(), Sin(a.clone()))),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Add(..) | Sub(..) => 1,
            Mul(..) | Div(..) => 2,
            Neg(_) => 3,
            _ => 4,
        }
    }
}

pub fn neg(a: Expr) -> Expr {
    match a {
        x if x.is_zero() => Num(0.0),
        Neg(inner) => *inner,
        x => Neg(Box::new(x)),
    }
}

pub fn add(a: Expr, b: Expr) -> Expr {
    if a.is_zero() {
        return b;
    }
    if b.is_zero() {
        return a;
    }
    match b {
        Neg(inner) => Sub(Box::new(a), inner),
        b => Add(Box::new(a), Box::new(b)),
    }
}

pub fn sub(a: Expr, b: Expr) -> Expr {
    if b.is_zero() {
        return a;
    }
    if a.is_zero() {
        return neg(b);
    }
    match b {
        Neg(inner) => Add(Box::new(a), inner),
        b => Sub(Box::new(a), Box::new(b)),
    }
}

pub fn mul(a: Expr, b: Expr) -> Expr {
    if a.is_zero() || b.is_zero() {
        return Num(0.0);
    }
    if a.is_one() {
        return b;
    }
    if b.is_one() {
        return a;
    }
    match (a, b) {
        (Neg(x), Neg(y)) => mul(*x, *y),
        (Neg(x), y) => neg(mul(*x, y)),
        (x, Neg(y)) => neg(mul(x, *y)),
        (x, y) => Mul(Box::new(x), Box::new(y)),
    }
}

pub fn div(a: Expr, b: Expr) -> Expr {
    if a.is_zero() {
        return Num(0.0);
    }
    if b.is_one() {
        return a;
    }
    Div(Box::new(a), Box::new(b))
}

/// Direct recursive evaluation, used for constant folding and as a reference.
pub(crate) fn eval_tree(e: &Expr, z: Complex64) -> Complex64 {
    match e {
        Num(x) => Complex64::new(*x, 0.0),
        Pi => Complex64::new(std::f64::consts::PI, 0.0),
        I => Complex64::new(0.0, 1.0),
        Z => z,
        Neg(a) => -eval_tree(a, z),
        Add(a, b) => eval_tree(a, z) + eval_tree(b, z),
        Sub(a, b) => eval_tree(a, z) - eval_tree(b, z),
        Mul(a, b) => eval_tree(a, z) * eval_tree(b, z),
        Div(a, b) => eval_tree(a, z) / eval_tree(b, z),
        Exp(a) => eval_tree(a, z).exp(),
        Sin(a) => eval_tree(a, z).sin(),
        Cos(a) => eval_tree(a, z).cos(),
        Log(a) => eval_tree(a, z).ln(),
        Sqrt(a) => eval_tree(a, z).sqrt(),
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

/// Printing is exact: `parse(e.to_string()) == e` for every tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Num(x) => write!(f, "{x:?}"),
            Pi => write!(f, "pi"),
            I => write!(f, "i"),
            Z => write!(f, "z"),
            Neg(a) => {
                write!(f, "-")?;
                write_operand(f, a, a.precedence() < 3)
            }
            Add(a, b) | Sub(a, b) => {
                write_operand(f, a, a.precedence() < 1)?;
                write!(f, "{}", if matches!(self, Add(..)) { " + " } else { " - " })?;
                write_operand(f, b, b.precedence() <= 1 || matches!(**b, Neg(_)))
            }
            Mul(a, b) | Div(a, b) => {
                write_operand(f, a, a.precedence() < 2)?;
                write!(f, "{}", if matches!(self, Mul(..)) { "*" } else { "/" })?;
                write_operand(f, b, b.precedence() <= 3)
            }
            Exp(a) => write!(f, "exp({a})"),
            Sin(a) => write!(f, "sin({a})"),
            Cos(a) => write!(f, "cos({a})"),
            Log(a) => write!(f, "log({a})"),
            Sqrt(a) => write!(f, "sqrt({a})"),
        }
    }
}
