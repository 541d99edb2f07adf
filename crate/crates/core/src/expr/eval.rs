use std::collections::BTreeMap;

use num_traits::ToPrimitive;
use thiserror::Error;

use super::{BinaryOp, Expr, Node, UnaryOp};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("domain error: {0}")]
    Domain(String),
}

/// Values for named variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Binding(BTreeMap<String, f64>);

impl Binding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.set(name, value);
        self
    }

    pub fn set(&mut self, name: &str, value: f64) {
        self.0.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }

    pub fn remove(&mut self, name: &str) -> Option<f64> {
        self.0.remove(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Entries of `other` override entries of `self`.
    pub fn merged(&self, other: &Binding) -> Binding {
        let mut out = self.clone();
        out.0.extend(other.0.iter().map(|(k, v)| (k.clone(), *v)));
        out
    }
}

impl<S: Into<String>> FromIterator<(S, f64)> for Binding {
    fn from_iter<I: IntoIterator<Item = (S, f64)>>(iter: I) -> Self {
        Binding(iter.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }
}

fn apply_unary(op: UnaryOp, a: f64) -> Result<f64, EvalError> {
    Ok(match op {
        UnaryOp::Neg => -a,
        UnaryOp::Exp => a.exp(),
        UnaryOp::Sin => a.sin(),
        UnaryOp::Cos => a.cos(),
        UnaryOp::Sqrt => {
            if a < 0.0 {
                return Err(EvalError::Domain(format!("sqrt of negative value {a}")));
            }
            a.sqrt()
        }
    })
}

/// `base^(twice/2)`.
fn apply_pow(base: f64, twice: i32) -> Result<f64, EvalError> {
    if base == 0.0 && twice < 0 {
        return Err(EvalError::DivisionByZero);
    }
    if twice % 2 == 0 {
        Ok(base.powi(twice / 2))
    } else {
        if base < 0.0 {
            return Err(EvalError::Domain(format!(
                "half-integer power of negative value {base}"
            )));
        }
        Ok(base.sqrt().powi(twice))
    }
}

fn apply_binary(op: BinaryOp, a: f64, b: f64) -> Result<f64, EvalError> {
    Ok(match op {
        BinaryOp::Add => a + b,
        BinaryOp::Sub => a - b,
        BinaryOp::Mul => a * b,
        BinaryOp::Div => {
            if b == 0.0 {
                return Err(EvalError::DivisionByZero);
            }
            a / b
        }
        BinaryOp::Pow => unreachable!("powers are evaluated through apply_pow"),
    })
}

fn exponent_twice(e: &Expr) -> i32 {
    let c = e.as_const().expect("exponent is a constant by construction");
    let twice = c.to_exact() * num_rational::BigRational::from_integer(2.into());
    twice.to_integer().to_i32().expect("exponent fits in i32")
}

pub(super) fn eval(e: &Expr, b: &Binding) -> Result<f64, EvalError> {
    match e.node() {
        Node::Const(n) => Ok(n.to_f64()),
        Node::Var(v) => b.get(v).ok_or_else(|| EvalError::Unbound(v.to_string())),
        Node::Unary(op, a) => apply_unary(*op, eval(a, b)?),
        Node::Binary(BinaryOp::Pow, base, exp) => apply_pow(eval(base, b)?, exponent_twice(exp)),
        Node::Binary(op, x, y) => apply_binary(*op, eval(x, b)?, eval(y, b)?),
    }
}

#[derive(Debug, Clone)]
enum Compiled {
    Const(f64),
    Slot(usize),
    Unary(UnaryOp, Box<Compiled>),
    Pow(Box<Compiled>, i32),
    Binary(BinaryOp, Box<Compiled>, Box<Compiled>),
}

/// An expression with variables resolved to positional slots, for repeated
/// evaluation in integrators and collocation.
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    root: Compiled,
    arity: usize,
}

impl CompiledExpr {
    /// Variables listed in `slots` are read from the argument slice; any other
    /// variable must be bound in `constants`.
    pub fn new(e: &Expr, slots: &[&str], constants: &Binding) -> Result<Self, EvalError> {
        Ok(CompiledExpr {
            root: compile(e, slots, constants)?,
            arity: slots.len(),
        })
    }

    pub fn eval(&self, args: &[f64]) -> Result<f64, EvalError> {
        debug_assert_eq!(args.len(), self.arity);
        run(&self.root, args)
    }
}

fn compile(e: &Expr, slots: &[&str], constants: &Binding) -> Result<Compiled, EvalError> {
    Ok(match e.node() {
        Node::Const(n) => Compiled::Const(n.to_f64()),
        Node::Var(v) => match slots.iter().position(|s| *s == &**v) {
            Some(i) => Compiled::Slot(i),
            None => Compiled::Const(
                constants
                    .get(v)
                    .ok_or_else(|| EvalError::Unbound(v.to_string()))?,
            ),
        },
        Node::Unary(op, a) => Compiled::Unary(*op, Box::new(compile(a, slots, constants)?)),
        Node::Binary(BinaryOp::Pow, base, exp) => {
            Compiled::Pow(Box::new(compile(base, slots, constants)?), exponent_twice(exp))
        }
        Node::Binary(op, a, b) => Compiled::Binary(
            *op,
            Box::new(compile(a, slots, constants)?),
            Box::new(compile(b, slots, constants)?),
        ),
    })
}

fn run(c: &Compiled, args: &[f64]) -> Result<f64, EvalError> {
    match c {
        Compiled::Const(v) => Ok(*v),
        Compiled::Slot(i) => Ok(args[*i]),
        Compiled::Unary(op, a) => apply_unary(*op, run(a, args)?),
        Compiled::Pow(base, twice) => apply_pow(run(base, args)?, *twice),
        Compiled::Binary(op, a, b) => apply_binary(*op, run(a, args)?, run(b, args)?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn missing_binding_is_reported_by_name() {
        let e = parse("x + w0").unwrap();
        assert_eq!(
            e.eval(&Binding::new().with("x", 1.0)),
            Err(EvalError::Unbound("w0".into()))
        );
    }

    #[test]
    fn domain_errors() {
        let b = Binding::new().with("x", -1.0);
        assert!(matches!(parse("sqrt(x)").unwrap().eval(&b), Err(EvalError::Domain(_))));
        assert!(matches!(parse("x^(3/2)").unwrap().eval(&b), Err(EvalError::Domain(_))));
        let zero = Binding::new().with("x", 0.0);
        assert_eq!(parse("x^-2").unwrap().eval(&zero), Err(EvalError::DivisionByZero));
    }

    #[test]
    fn compiled_matches_tree_walk() {
        let e = parse("m/2*(xd^2 - w0^2*x^2)*exp(2*G*t) + sqrt(x^2+1)^3").unwrap();
        let consts = Binding::new().with("m", 1.5).with("w0", 0.7).with("G", 0.1);
        let c = e.compile(&["x", "xd", "t"], &consts).unwrap();
        let direct = e
            .eval(&consts.merged(&Binding::new().with("x", 0.3).with("xd", -1.2).with("t", 2.0)))
            .unwrap();
        assert_eq!(c.eval(&[0.3, -1.2, 2.0]).unwrap(), direct);
        assert!(matches!(
            e.compile(&["x"], &consts),
            Err(EvalError::Unbound(name)) if name == "xd"
        ));
    }
}
