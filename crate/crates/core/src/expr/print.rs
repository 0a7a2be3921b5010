use std::fmt;

use super::{BinOp, Expr};

// Binding levels following the grammar: expr < term < factor < unary < primary.
const ADD: u8 = 1;
const MUL: u8 = 2;
const POW: u8 = 3;
const UNARY: u8 = 4;
const ATOM: u8 = 5;

fn level(e: &Expr) -> u8 {
    match e {
        Expr::Num(_) | Expr::Var(_) | Expr::Param(_) | Expr::Call { .. } => ATOM,
        Expr::Neg(_) => UNARY,
        Expr::Binary { op, .. } => match op {
            BinOp::Add | BinOp::Sub => ADD,
            BinOp::Mul | BinOp::Div => MUL,
            BinOp::Pow => POW,
        },
    }
}

fn child(f: &mut fmt::Formatter<'_>, e: &Expr, min_level: u8) -> fmt::Result {
    if level(e) < min_level {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

/// Prints source text that parses back to the same tree, using the minimum
/// parentheses the grammar needs.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // Display for f64 never uses exponent notation, so the output is
            // always a valid NUMBER and round-trips exactly.
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Param(name) => f.write_str(name),
            Expr::Neg(inner) => {
                f.write_str("-")?;
                child(f, inner, UNARY)
            }
            Expr::Binary { op, lhs, rhs } => {
                let (left_min, right_min) = match op {
                    BinOp::Add | BinOp::Sub => (ADD, MUL),
                    BinOp::Mul | BinOp::Div => (MUL, POW),
                    BinOp::Pow => (UNARY, POW),
                };
                child(f, lhs, left_min)?;
                if *op == BinOp::Pow {
                    write!(f, "^")?;
                } else {
                    write!(f, " {} ", op.symbol())?;
                }
                child(f, rhs, right_min)
            }
            Expr::Call { func, args } => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}
