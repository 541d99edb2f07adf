//! Immutable expression trees over named variables.
//!
//! Every symbolic object in the toolkit (Lagrangians, Hamiltonians, symmetry
//! generators, charges) is an [`Expr`]. Constants are kept as exact rationals
//! wherever possible; floating point only enters at evaluation time.
//!
//! Text grammar accepted by [`parse`]:
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := factor (('*' | '/') factor)*
//! factor   := '-' factor | power
//! power    := base ('^' exponent)?
//! exponent := '-'? power              (right-associative)
//! base     := number | ident | func '(' expr ')' | '(' expr ')'
//! func     := 'exp' | 'sin' | 'cos' | 'sqrt'
//! ```
//!
//! Exponents must fold to an integer or half-integer constant.

mod canon;
mod diff;
mod eval;
mod parse;
mod print;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub use canon::Poly;
pub use eval::{Binding, CompiledExpr, EvalError};
pub use parse::{parse, ParseError};

/// A numeric literal.
#[derive(Clone, Debug)]
pub enum Number {
    Exact(BigRational),
    Float(f64),
}

impl Number {
    pub fn int(n: i64) -> Self {
        Number::Exact(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Number::Exact(r) => ratio_to_f64(r),
            Number::Float(f) => *f,
        }
    }

    /// Lossless conversion to an exact rational (floats use their binary value).
    pub fn to_exact(&self) -> BigRational {
        match self {
            Number::Exact(r) => r.clone(),
            Number::Float(f) => BigRational::from_float(*f).unwrap_or_else(BigRational::zero),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Number::Exact(r) => r.is_zero(),
            Number::Float(f) => *f == 0.0,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Number::Exact(r) => r.is_one(),
            Number::Float(f) => *f == 1.0,
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Number::Exact(r) => r.is_negative(),
            Number::Float(f) => *f < 0.0,
        }
    }

    fn combine(
        &self,
        other: &Number,
        exact: impl Fn(&BigRational, &BigRational) -> Option<BigRational>,
        float: impl Fn(f64, f64) -> f64,
    ) -> Option<Number> {
        match (self, other) {
            (Number::Exact(a), Number::Exact(b)) => exact(a, b).map(Number::Exact),
            _ => Some(Number::Float(float(self.to_f64(), other.to_f64()))),
        }
    }
}

impl PartialEq for Number {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Number::Exact(a), Number::Exact(b)) => a == b,
            (Number::Float(a), Number::Float(b)) => a.to_bits() == b.to_bits(),
            _ => false,
        }
    }
}

pub(crate) fn ratio_to_f64(r: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_i64(), r.denom().to_i64()) {
        if n.unsigned_abs() < (1 << 53) && d < (1 << 53) {
            return n as f64 / d as f64;
        }
    }
    r.to_f64().unwrap_or(f64::NAN)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum UnaryOp {
    Neg,
    Exp,
    Sin,
    Cos,
    Sqrt,
}

impl UnaryOp {
    pub fn function_name(self) -> Option<&'static str> {
        match self {
            UnaryOp::Neg => None,
            UnaryOp::Exp => Some("exp"),
            UnaryOp::Sin => Some("sin"),
            UnaryOp::Cos => Some("cos"),
            UnaryOp::Sqrt => Some("sqrt"),
        }
    }

    pub fn from_function_name(name: &str) -> Option<Self> {
        match name {
            "exp" => Some(UnaryOp::Exp),
            "sin" => Some(UnaryOp::Sin),
            "cos" => Some(UnaryOp::Cos),
            "sqrt" => Some(UnaryOp::Sqrt),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Const(Number),
    Var(Arc<str>),
    Unary(UnaryOp, Expr),
    Binary(BinaryOp, Expr, Expr),
}

/// Shared, immutable expression tree.
#[derive(Clone, PartialEq)]
pub struct Expr(Arc<Node>);

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    fn from_node(node: Node) -> Self {
        Expr(Arc::new(node))
    }

    pub fn constant(n: Number) -> Self {
        Self::from_node(Node::Const(n))
    }

    pub fn int(n: i64) -> Self {
        Self::constant(Number::int(n))
    }

    pub fn zero() -> Self {
        Self::int(0)
    }

    pub fn one() -> Self {
        Self::int(1)
    }

    /// Exact rational `numer/denom`. Panics if `denom` is zero.
    pub fn rational(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        Self::exact(BigRational::new(numer.into(), denom.into()))
    }

    pub fn exact(r: BigRational) -> Self {
        Self::constant(Number::Exact(r))
    }

    /// Floating literal. Panics on non-finite input.
    pub fn float(v: f64) -> Self {
        assert!(v.is_finite(), "non-finite literal {v}");
        Self::constant(Number::Float(v))
    }

    /// Exact constant from the shortest decimal text that round-trips `v`,
    /// so that `0.1` becomes `1/10` rather than its binary approximation.
    pub fn decimal(v: f64) -> Self {
        assert!(v.is_finite(), "non-finite literal {v}");
        let text = format!("{v:e}");
        match parse::parse_decimal(&text) {
            Some(r) => Self::exact(r),
            None => Self::float(v),
        }
    }

    pub fn var(name: &str) -> Self {
        Self::from_node(Node::Var(Arc::from(name)))
    }

    pub fn as_const(&self) -> Option<&Number> {
        match self.node() {
            Node::Const(n) => Some(n),
            _ => None,
        }
    }

    pub fn as_var(&self) -> Option<&str> {
        match self.node() {
            Node::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_const_zero(&self) -> bool {
        self.as_const().is_some_and(Number::is_zero)
    }

    pub fn is_const_one(&self) -> bool {
        self.as_const().is_some_and(Number::is_one)
    }

    pub fn neg(&self) -> Expr {
        match self.node() {
            Node::Const(Number::Exact(r)) => Expr::exact(-r),
            Node::Const(Number::Float(f)) => Expr::float(-f),
            Node::Unary(UnaryOp::Neg, inner) => inner.clone(),
            _ => Self::from_node(Node::Unary(UnaryOp::Neg, self.clone())),
        }
    }

    pub fn exp(&self) -> Expr {
        if self.is_const_zero() {
            return Expr::one();
        }
        Self::from_node(Node::Unary(UnaryOp::Exp, self.clone()))
    }

    pub fn sin(&self) -> Expr {
        if self.is_const_zero() {
            return Expr::zero();
        }
        Self::from_node(Node::Unary(UnaryOp::Sin, self.clone()))
    }

    pub fn cos(&self) -> Expr {
        if self.is_const_zero() {
            return Expr::one();
        }
        Self::from_node(Node::Unary(UnaryOp::Cos, self.clone()))
    }

    pub fn sqrt(&self) -> Expr {
        if self.is_const_zero() || self.is_const_one() {
            return self.clone();
        }
        Self::from_node(Node::Unary(UnaryOp::Sqrt, self.clone()))
    }

    pub fn unary(op: UnaryOp, arg: &Expr) -> Expr {
        match op {
            UnaryOp::Neg => arg.neg(),
            UnaryOp::Exp => arg.exp(),
            UnaryOp::Sin => arg.sin(),
            UnaryOp::Cos => arg.cos(),
            UnaryOp::Sqrt => arg.sqrt(),
        }
    }

    pub fn add(&self, rhs: &Expr) -> Expr {
        if self.is_const_zero() {
            return rhs.clone();
        }
        if rhs.is_const_zero() {
            return self.clone();
        }
        if let (Some(a), Some(b)) = (self.as_const(), rhs.as_const()) {
            if let Some(n) = a.combine(b, |x, y| Some(x + y), |x, y| x + y) {
                return Expr::constant(n);
            }
        }
        Self::from_node(Node::Binary(BinaryOp::Add, self.clone(), rhs.clone()))
    }

    pub fn sub(&self, rhs: &Expr) -> Expr {
        if rhs.is_const_zero() {
            return self.clone();
        }
        if self.is_const_zero() {
            return rhs.neg();
        }
        if let (Some(a), Some(b)) = (self.as_const(), rhs.as_const()) {
            if let Some(n) = a.combine(b, |x, y| Some(x - y), |x, y| x - y) {
                return Expr::constant(n);
            }
        }
        Self::from_node(Node::Binary(BinaryOp::Sub, self.clone(), rhs.clone()))
    }

    pub fn mul(&self, rhs: &Expr) -> Expr {
        if self.is_const_zero() || rhs.is_const_zero() {
            return Expr::zero();
        }
        if self.is_const_one() {
            return rhs.clone();
        }
        if rhs.is_const_one() {
            return self.clone();
        }
        if let (Some(a), Some(b)) = (self.as_const(), rhs.as_const()) {
            if let Some(n) = a.combine(b, |x, y| Some(x * y), |x, y| x * y) {
                return Expr::constant(n);
            }
        }
        if self.as_const().is_some_and(|c| c.is_negative() && c.to_f64() == -1.0) {
            return rhs.neg();
        }
        Self::from_node(Node::Binary(BinaryOp::Mul, self.clone(), rhs.clone()))
    }

    pub fn div(&self, rhs: &Expr) -> Expr {
        if rhs.is_const_one() {
            return self.clone();
        }
        if self.is_const_zero() && !rhs.is_const_zero() {
            return Expr::zero();
        }
        if let (Some(a), Some(b)) = (self.as_const(), rhs.as_const()) {
            if !b.is_zero() {
                if let Some(n) = a.combine(b, |x, y| Some(x / y), |x, y| x / y) {
                    return Expr::constant(n);
                }
            }
        }
        Self::from_node(Node::Binary(BinaryOp::Div, self.clone(), rhs.clone()))
    }

    /// Integer power.
    pub fn powi(&self, n: i64) -> Expr {
        self.pow_exact(&BigRational::from_integer(n.into()))
            .expect("integer exponents are always supported")
    }

    /// Power with an exact exponent; only integer and half-integer exponents
    /// are representable.
    pub fn pow_exact(&self, exponent: &BigRational) -> Result<Expr, ParseError> {
        let twice = exponent * BigRational::from_integer(2.into());
        if !twice.is_integer() {
            return Err(ParseError::UnsupportedExponent {
                offset: 0,
                exponent: exponent.to_string(),
            });
        }
        if exponent.is_zero() {
            return Ok(Expr::one());
        }
        if exponent.is_one() {
            return Ok(self.clone());
        }
        if let Some(Number::Exact(base)) = self.as_const() {
            if exponent.is_integer() {
                if let Some(k) = exponent.to_integer().to_i32() {
                    if !(base.is_zero() && k < 0) && k.abs() <= 64 {
                        return Ok(Expr::exact(num_traits::pow::Pow::pow(base, k)));
                    }
                }
            }
        }
        if let Node::Binary(BinaryOp::Pow, inner, e) = self.node() {
            // (a^m)^n = a^(m n) only for integer m, n.
            if let Some(Number::Exact(m)) = e.as_const() {
                if m.is_integer() && exponent.is_integer() {
                    return inner.pow_exact(&(m * exponent));
                }
            }
        }
        Ok(Self::from_node(Node::Binary(
            BinaryOp::Pow,
            self.clone(),
            Expr::exact(exponent.clone()),
        )))
    }

    /// Binary constructor with the same folding as the specialised methods.
    pub fn binary(op: BinaryOp, lhs: &Expr, rhs: &Expr) -> Result<Expr, ParseError> {
        Ok(match op {
            BinaryOp::Add => lhs.add(rhs),
            BinaryOp::Sub => lhs.sub(rhs),
            BinaryOp::Mul => lhs.mul(rhs),
            BinaryOp::Div => lhs.div(rhs),
            BinaryOp::Pow => {
                let exponent = rhs.as_const().ok_or_else(|| ParseError::UnsupportedExponent {
                    offset: 0,
                    exponent: rhs.to_string(),
                })?;
                lhs.pow_exact(&exponent.to_exact())?
            }
        })
    }

    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        terms.into_iter().fold(Expr::zero(), |acc, t| acc.add(&t))
    }

    pub fn product<I: IntoIterator<Item = Expr>>(factors: I) -> Expr {
        factors.into_iter().fold(Expr::one(), |acc, f| acc.mul(&f))
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self.node() {
            Node::Const(_) => {}
            Node::Var(v) => {
                out.insert(v.to_string());
            }
            Node::Unary(_, a) => a.collect_vars(out),
            Node::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn contains_var(&self, name: &str) -> bool {
        match self.node() {
            Node::Const(_) => false,
            Node::Var(v) => &**v == name,
            Node::Unary(_, a) => a.contains_var(name),
            Node::Binary(_, a, b) => a.contains_var(name) || b.contains_var(name),
        }
    }

    pub fn substitute(&self, name: &str, replacement: &Expr) -> Expr {
        let mut map = BTreeMap::new();
        map.insert(name.to_string(), replacement.clone());
        self.substitute_all(&map)
    }

    /// Simultaneous substitution of variables.
    pub fn substitute_all(&self, map: &BTreeMap<String, Expr>) -> Expr {
        match self.node() {
            Node::Const(_) => self.clone(),
            Node::Var(v) => map.get(&**v).cloned().unwrap_or_else(|| self.clone()),
            Node::Unary(op, a) => Expr::unary(*op, &a.substitute_all(map)),
            Node::Binary(op, a, b) => {
                let (a, b) = (a.substitute_all(map), b.substitute_all(map));
                Expr::binary(*op, &a, &b).expect("exponent stays constant under substitution")
            }
        }
    }

    /// Replaces every bound variable by the exact decimal form of its value.
    pub fn bind_exact(&self, binding: &Binding) -> Expr {
        let map: BTreeMap<String, Expr> = binding
            .iter()
            .map(|(k, v)| (k.to_string(), Expr::decimal(v)))
            .collect();
        self.substitute_all(&map)
    }

    pub fn diff(&self, var: &str) -> Expr {
        diff::diff(self, var)
    }

    pub fn eval(&self, binding: &Binding) -> Result<f64, EvalError> {
        eval::eval(self, binding)
    }

    pub fn compile(&self, slots: &[&str], constants: &Binding) -> Result<CompiledExpr, EvalError> {
        CompiledExpr::new(self, slots, constants)
    }

    /// Canonical polynomial form (see [`Poly`]).
    pub fn canonical(&self) -> Poly {
        Poly::from_expr(self)
    }

    /// Expands to canonical form and converts back.
    pub fn simplify(&self) -> Expr {
        self.canonical().to_expr()
    }

    /// Sound zero test on the canonical form (see [`Poly::is_identically_zero`]).
    pub fn is_zero(&self) -> bool {
        self.canonical().is_identically_zero()
    }
}

pub fn simplify(e: &Expr) -> Expr {
    e.simplify()
}

pub fn is_zero(e: &Expr) -> bool {
    e.is_zero()
}

pub fn diff_expr(e: &Expr, var: &str) -> Expr {
    e.diff(var)
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident) => {
        impl ops::$trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$method(&self, &rhs)
            }
        }
        impl ops::$trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::$method(&self, rhs)
            }
        }
        impl ops::$trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$method(self, &rhs)
            }
        }
        impl ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::$method(self, rhs)
            }
        }
    };
}

impl_binop!(Add, add);
impl_binop!(Sub, sub);
impl_binop!(Mul, mul);
impl_binop!(Div, div);

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(&self)
    }
}

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Self {
        Expr::int(n)
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}
