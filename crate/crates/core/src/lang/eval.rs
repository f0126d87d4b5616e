use num_complex::Complex64;
use thiserror::Error;

use super::expr::{eval_tree, Expr};

/// Real part of an `exp` argument (or |Im| of a `sin`/`cos` argument) beyond
/// which evaluation saturates.
pub const SATURATION: f64 = 700.0;

/// Evaluation left the representable range; downstream code treats it as escape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("evaluation saturated")]
pub struct Overflow;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Const(Complex64),
    Z,
    Neg,
    Add,
    Sub,
    Mul,
    DivConst(Complex64),
    Exp,
    Sin,
    Cos,
}

const STACK: usize = 48;

/// Postfix program with constant sub-trees folded.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    ops: Vec<Op>,
    depth: usize,
}

impl Program {
    pub fn compile(e: &Expr) -> Program {
        let mut ops = Vec::new();
        emit(e, &mut ops);
        let mut depth = 0usize;
        let mut cur = 0usize;
        for op in &ops {
            match op {
                Op::Const(_) | Op::Z => cur += 1,
                Op::Add | Op::Sub | Op::Mul => cur -= 1,
                _ => {}
            }
            depth = depth.max(cur);
        }
        Program { ops, depth }
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64, Overflow> {
        if self.depth > STACK {
            return self.eval_heap(z);
        }
        let mut st = [Complex64::new(0.0, 0.0); STACK];
        let mut sp = 0usize;
        for op in &self.ops {
            step(op, &mut st, &mut sp, z)?;
        }
        finish(st[0])
    }

    fn eval_heap(&self, z: Complex64) -> Result<Complex64, Overflow> {
        let mut st = vec![Complex64::new(0.0, 0.0); self.depth];
        let mut sp = 0usize;
        for op in &self.ops {
            step(op, &mut st, &mut sp, z)?;
        }
        finish(st[0])
    }
}

#[inline]
fn finish(v: Complex64) -> Result<Complex64, Overflow> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Overflow)
    }
}

#[inline]
fn step(op: &Op, st: &mut [Complex64], sp: &mut usize, z: Complex64) -> Result<(), Overflow> {
    match *op {
        Op::Const(c) => {
            st[*sp] = c;
            *sp += 1;
        }
        Op::Z => {
            st[*sp] = z;
            *sp += 1;
        }
        Op::Neg => st[*sp - 1] = -st[*sp - 1],
        Op::Add | Op::Sub | Op::Mul => {
            let b = st[*sp - 1];
            let a = st[*sp - 2];
            *sp -= 1;
            st[*sp - 1] = match op {
                Op::Add => a + b,
                Op::Sub => a - b,
                _ => a * b,
            };
        }
        Op::DivConst(c) => st[*sp - 1] /= c,
        Op::Exp => {
            let a = st[*sp - 1];
            if !(a.re <= SATURATION) || !a.im.is_finite() {
                return Err(Overflow);
            }
            st[*sp - 1] = a.exp();
        }
        Op::Sin | Op::Cos => {
            let a = st[*sp - 1];
            if !(a.im.abs() <= SATURATION) || !a.re.is_finite() {
                return Err(Overflow);
            }
            st[*sp - 1] = if matches!(op, Op::Sin) { a.sin() } else { a.cos() };
        }
    }
    Ok(())
}

fn emit(e: &Expr, ops: &mut Vec<Op>) {
    if e.is_constant() {
        ops.push(Op::Const(eval_tree(e, Complex64::new(0.0, 0.0))));
        return;
    }
    match e {
        Expr::Z => ops.push(Op::Z),
        Expr::Neg(a) => {
            emit(a, ops);
            ops.push(Op::Neg);
        }
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
            emit(a, ops);
            emit(b, ops);
            ops.push(match e {
                Expr::Add(..) => Op::Add,
                Expr::Sub(..) => Op::Sub,
                _ => Op::Mul,
            });
        }
        Expr::Div(a, b) => {
            emit(a, ops);
            ops.push(Op::DivConst(eval_tree(b, Complex64::new(0.0, 0.0))));
        }
        Expr::Exp(a) | Expr::Sin(a) | Expr::Cos(a) => {
            emit(a, ops);
            ops.push(match e {
                Expr::Exp(_) => Op::Exp,
                Expr::Sin(_) => Op::Sin,
                _ => Op::Cos,
            });
        }
        // log, sqrt and literals are constant and handled above
        _ => unreachable!("constant node reached the non-constant emitter"),
    }
}
