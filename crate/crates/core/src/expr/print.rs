use std::fmt;

use num_traits::{One, Signed};

use super::{BinaryOp, Expr, Node, Number};

// Binding strength of the printed form; larger binds tighter.
const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const PREFIX: u8 = 3;
const POWER: u8 = 4;
const ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match e.node() {
        Node::Const(Number::Exact(r)) => {
            if r.is_negative() {
                PREFIX
            } else if !r.denom().is_one() {
                PRODUCT
            } else {
                ATOM
            }
        }
        Node::Const(Number::Float(f)) => {
            if *f < 0.0 {
                PREFIX
            } else {
                ATOM
            }
        }
        Node::Var(_) => ATOM,
        Node::Unary(op, _) => {
            if op.function_name().is_some() {
                ATOM
            } else {
                PREFIX
            }
        }
        Node::Binary(BinaryOp::Add | BinaryOp::Sub, _, _) => SUM,
        Node::Binary(BinaryOp::Mul | BinaryOp::Div, _, _) => PRODUCT,
        Node::Binary(BinaryOp::Pow, _, _) => POWER,
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if precedence(e) < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(Number::Exact(r)) => write!(f, "{r}"),
            Node::Const(Number::Float(v)) => write!(f, "{v:?}"),
            Node::Var(v) => f.write_str(v),
            Node::Unary(op, a) => match op.function_name() {
                Some(name) => write!(f, "{name}({a})"),
                None => {
                    // −(a·b) = (−a)·b, so products need no parentheses.
                    f.write_str("-")?;
                    write_operand(f, a, PRODUCT)
                }
            },
            Node::Binary(op, a, b) => {
                let (sym, lhs_min, rhs_min) = match op {
                    BinaryOp::Add => ("+", SUM, SUM),
                    BinaryOp::Sub => ("-", SUM, PRODUCT),
                    BinaryOp::Mul => ("*", PRODUCT, PRODUCT),
                    BinaryOp::Div => ("/", PRODUCT, PREFIX),
                    BinaryOp::Pow => {
                        write_operand(f, a, ATOM)?;
                        f.write_str("^")?;
                        return write_operand(f, b, ATOM);
                    }
                };
                write_operand(f, a, lhs_min)?;
                match op {
                    BinaryOp::Add | BinaryOp::Sub => write!(f, " {sym} ")?,
                    _ => f.write_str(sym)?,
                }
                write_operand(f, b, rhs_min)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{parse, Binding, Expr};

    #[test]
    fn printing_round_trips() {
        let b = Binding::new().with("x", 0.7).with("y", -1.3).with("z", 2.0);
        for src in [
            "x - (y - z)",
            "x/(y*z)",
            "-x^2",
            "(-x)^2",
            "x^(3/2) + z^-1",
            "2^3^2",
            "-(x + y)*z",
            "x/y/z",
            "x - -y",
            "-(2*x/y) + -(x*y)^2",
            "exp(-x)*sin(2*x)/cos(y)",
        ] {
            let e = parse(src).unwrap();
            let printed = e.to_string();
            let again = parse(&printed).unwrap_or_else(|err| panic!("{printed}: {err}"));
            assert_eq!(e.eval(&b).unwrap(), again.eval(&b).unwrap(), "{src} -> {printed}");
        }
    }

    #[test]
    fn constants_print_reparseably() {
        let e = Expr::rational(-3, 7).mul(&Expr::var("x")).powi(2);
        assert_eq!(e.to_string(), "(-3/7*x)^2");
        assert_eq!(Expr::float(1e-300).to_string(), "1e-300");
    }
}
