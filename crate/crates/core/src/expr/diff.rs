use num_rational::BigRational;
use num_traits::One;

use super::{BinaryOp, Expr, Node, UnaryOp};

/// Exact partial derivative; every variable other than `v` is independent.
pub(super) fn diff(e: &Expr, v: &str) -> Expr {
    if !e.contains_var(v) {
        return Expr::zero();
    }
    match e.node() {
        Node::Const(_) => Expr::zero(),
        Node::Var(name) => {
            if &**name == v {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Node::Unary(op, a) => {
            let da = diff(a, v);
            match op {
                UnaryOp::Neg => da.neg(),
                UnaryOp::Exp => e.mul(&da),
                UnaryOp::Sin => a.cos().mul(&da),
                UnaryOp::Cos => a.sin().neg().mul(&da),
                UnaryOp::Sqrt => da.div(&Expr::int(2).mul(e)),
            }
        }
        Node::Binary(op, a, b) => match op {
            BinaryOp::Add => diff(a, v).add(&diff(b, v)),
            BinaryOp::Sub => diff(a, v).sub(&diff(b, v)),
            BinaryOp::Mul => diff(a, v).mul(b).add(&a.mul(&diff(b, v))),
            BinaryOp::Div => {
                let (da, db) = (diff(a, v), diff(b, v));
                if db.is_const_zero() {
                    da.div(b)
                } else {
                    da.mul(b).sub(&a.mul(&db)).div(&b.powi(2))
                }
            }
            BinaryOp::Pow => {
                let n = b.as_const().expect("constant exponent").to_exact();
                let lowered = a
                    .pow_exact(&(&n - BigRational::one()))
                    .expect("half-integer exponents stay half-integer");
                Expr::exact(n).mul(&lowered).mul(&diff(a, v))
            }
        },
    }
}
