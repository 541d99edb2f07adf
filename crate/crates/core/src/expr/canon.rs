//! Canonical expanded form used by `simplify` and `is_zero`.
//!
//! An expression is expanded into a sum of monomials with exact rational
//! coefficients. A monomial is a product of
//!
//! * integer (possibly negative) powers of variables,
//! * integer powers of opaque atoms `sin(p)`, `cos(p)`, `sqrt(p)` and
//!   `1/p` (the latter only for multi-term `p`), with `p` itself canonical,
//! * at most one `exp(p)` factor; exponentials multiply by adding arguments.
//!
//! Each rewrite is an algebraic identity, so equal canonical forms imply equal
//! values wherever both sides are defined. The zero test is therefore sound;
//! it is complete for polynomials and Laurent polynomials in the variables with
//! coefficients built from exponentials, which covers the Lagrangians handled
//! by this crate.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{BinaryOp, Expr, Node, UnaryOp};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Atom {
    Sin(Poly),
    Cos(Poly),
    Sqrt(Poly),
    /// `1/p`; the exponent counts powers of the reciprocal.
    Recip(Poly),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
struct Monomial {
    vars: BTreeMap<Arc<str>, i32>,
    atoms: BTreeMap<Atom, i32>,
    exp: Option<Box<Poly>>,
}

impl Monomial {
    fn unit() -> Self {
        Self::default()
    }

    fn is_unit(&self) -> bool {
        self.vars.is_empty() && self.atoms.is_empty() && self.exp.is_none()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let mut vars = self.vars.clone();
        for (v, e) in &other.vars {
            let slot = vars.entry(v.clone()).or_insert(0);
            *slot += e;
            if *slot == 0 {
                vars.remove(v);
            }
        }
        let mut atoms = self.atoms.clone();
        for (a, e) in &other.atoms {
            let slot = atoms.entry(a.clone()).or_insert(0);
            *slot += e;
            if *slot == 0 {
                atoms.remove(a);
            }
        }
        let exp = match (&self.exp, &other.exp) {
            (None, None) => None,
            (Some(a), None) | (None, Some(a)) => Some(a.clone()),
            (Some(a), Some(b)) => {
                let sum = a.add(b);
                (!sum.is_zero()).then(|| Box::new(sum))
            }
        };
        Monomial { vars, atoms, exp }
    }

    fn inverse(&self) -> Monomial {
        Monomial {
            vars: self.vars.iter().map(|(v, e)| (v.clone(), -e)).collect(),
            atoms: self.atoms.iter().map(|(a, e)| (a.clone(), -e)).collect(),
            exp: self.exp.as_ref().map(|p| Box::new(p.neg())),
        }
    }

    fn mentions(&self, var: &str) -> bool {
        self.vars.keys().any(|v| &**v == var)
            || self.atoms.keys().any(|a| a.arg().mentions(var))
            || self.exp.as_ref().is_some_and(|p| p.mentions(var))
    }

    /// A rewrite that brings this monomial closer to normal form, if any applies.
    fn rewrite(&self) -> Option<Poly> {
        for (atom, &k) in &self.atoms {
            let replacement = match atom {
                Atom::Sqrt(p) if k.abs() >= 2 => {
                    let mut r = p.pow_int((k / 2) as i64);
                    if k % 2 != 0 {
                        r = r.mul(&Poly::atom(atom.clone(), k % 2));
                    }
                    r
                }
                Atom::Sin(p) if k >= 2 => {
                    let cos2 = Poly::atom(Atom::Cos(p.clone()), 2);
                    Poly::one()
                        .sub(&cos2)
                        .mul(&Poly::atom(atom.clone(), k - 2))
                }
                Atom::Recip(p) if k < 0 => p.pow_int(-k as i64),
                _ => continue,
            };
            let mut rest = self.clone();
            rest.atoms.remove(atom);
            return Some(Poly::monomial(rest, BigRational::one()).mul(&replacement));
        }
        None
    }
}

impl Atom {
    fn arg(&self) -> &Poly {
        match self {
            Atom::Sin(p) | Atom::Cos(p) | Atom::Sqrt(p) | Atom::Recip(p) => p,
        }
    }
}

/// Expanded sum of monomials with exact coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Poly {
    terms: BTreeMap<Monomial, BigRational>,
}

impl Poly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        Self::monomial(Monomial::unit(), c)
    }

    pub fn var(name: &str) -> Self {
        let mut m = Monomial::unit();
        m.vars.insert(Arc::from(name), 1);
        Self::monomial(m, BigRational::one())
    }

    fn monomial(m: Monomial, c: BigRational) -> Self {
        let mut p = Poly::zero();
        p.add_term(m, c);
        p
    }

    fn atom(a: Atom, k: i32) -> Self {
        if k == 0 {
            return Poly::one();
        }
        let mut m = Monomial::unit();
        m.atoms.insert(a, k);
        Self::monomial(m, BigRational::one())
    }

    fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(m).or_insert_with(BigRational::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.retain(|_, c| !c.is_zero());
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// The value if this polynomial is a plain constant.
    pub fn as_constant(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next()?;
                m.is_unit().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: &BigRational) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out.normalize()
    }

    fn normalize(self) -> Poly {
        if !self.terms.keys().any(|m| m.rewrite().is_some()) {
            return self;
        }
        let mut out = Poly::zero();
        for (m, c) in self.terms {
            match m.rewrite() {
                Some(r) => out = out.add(&r.scale(&c)),
                None => out.add_term(m, c),
            }
        }
        out.normalize()
    }

    pub fn pow_int(&self, n: i64) -> Poly {
        if n == 0 {
            return Poly::one();
        }
        if n < 0 {
            if self.terms.len() == 1 {
                let (m, c) = self.terms.iter().next().expect("one term");
                let inv = Poly::monomial(m.inverse(), c.recip());
                return inv.pow_int(-n);
            }
            if self.is_zero() {
                // 1/0 has no canonical form; keep it opaque so it never cancels
                return Poly::atom(Atom::Recip(Poly::zero()), (-n) as i32);
            }
            return Poly::atom(Atom::Recip(self.clone()), (-n) as i32);
        }
        let mut result = Poly::one();
        let mut base = self.clone();
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    fn exp_of(arg: Poly) -> Poly {
        if arg.is_zero() {
            return Poly::one();
        }
        let m = Monomial {
            exp: Some(Box::new(arg)),
            ..Monomial::unit()
        };
        Poly::monomial(m, BigRational::one())
    }

    fn leading_negative(&self) -> bool {
        self.terms.values().next().is_some_and(|c| c.is_negative())
    }

    fn sin_of(arg: Poly) -> Poly {
        if arg.is_zero() {
            return Poly::zero();
        }
        if arg.leading_negative() {
            return Poly::atom(Atom::Sin(arg.neg()), 1).neg();
        }
        Poly::atom(Atom::Sin(arg), 1)
    }

    fn cos_of(arg: Poly) -> Poly {
        if arg.is_zero() {
            return Poly::one();
        }
        if arg.leading_negative() {
            return Poly::atom(Atom::Cos(arg.neg()), 1);
        }
        Poly::atom(Atom::Cos(arg), 1)
    }

    fn sqrt_of(arg: Poly) -> Poly {
        if let Some(c) = arg.as_constant() {
            if let Some(root) = exact_sqrt(&c) {
                return Poly::constant(root);
            }
        }
        Poly::atom(Atom::Sqrt(arg), 1)
    }

    pub fn from_expr(e: &Expr) -> Poly {
        match e.node() {
            Node::Const(n) => Poly::constant(n.to_exact()),
            Node::Var(v) => Poly::var(v),
            Node::Unary(op, a) => {
                let a = Poly::from_expr(a);
                match op {
                    UnaryOp::Neg => a.neg(),
                    UnaryOp::Exp => Poly::exp_of(a),
                    UnaryOp::Sin => Poly::sin_of(a),
                    UnaryOp::Cos => Poly::cos_of(a),
                    UnaryOp::Sqrt => Poly::sqrt_of(a),
                }
            }
            Node::Binary(op, a, b) => match op {
                BinaryOp::Add => Poly::from_expr(a).add(&Poly::from_expr(b)),
                BinaryOp::Sub => Poly::from_expr(a).sub(&Poly::from_expr(b)),
                BinaryOp::Mul => Poly::from_expr(a).mul(&Poly::from_expr(b)),
                BinaryOp::Div => Poly::from_expr(a).mul(&Poly::reciprocal(b)),
                BinaryOp::Pow => {
                    let n = b.as_const().expect("constant exponent").to_exact();
                    let base = Poly::from_expr(a);
                    if n.is_integer() {
                        base.pow_int(n.to_integer().to_i64().expect("small exponent"))
                    } else {
                        let twice = (n * BigRational::from_integer(2.into())).to_integer();
                        Poly::sqrt_of(base).pow_int(twice.to_i64().expect("small exponent"))
                    }
                }
            },
        }
    }

    /// `1/e`, distributing over products and integer powers so that `1/p^k`
    /// and `(1/p)^k` share one form.
    fn reciprocal(e: &Expr) -> Poly {
        match e.node() {
            Node::Binary(BinaryOp::Mul, a, b) => Poly::reciprocal(a).mul(&Poly::reciprocal(b)),
            Node::Binary(BinaryOp::Div, a, b) => Poly::from_expr(b).mul(&Poly::reciprocal(a)),
            Node::Binary(BinaryOp::Pow, a, n) => match n.as_const().map(|n| n.to_exact()) {
                Some(n) if n.is_integer() => {
                    let k = n.to_integer().to_i64().expect("small exponent");
                    if k > 0 {
                        Poly::reciprocal(a).pow_int(k)
                    } else {
                        Poly::from_expr(a).pow_int(-k)
                    }
                }
                _ => Poly::from_expr(e).pow_int(-1),
            },
            _ => Poly::from_expr(e).pow_int(-1),
        }
    }

    pub fn to_expr(&self) -> Expr {
        let mut acc: Option<Expr> = None;
        for (m, c) in &self.terms {
            let term = term_expr(m, &c.abs());
            acc = Some(match (acc, c.is_negative()) {
                (None, false) => term,
                (None, true) => term.neg(),
                (Some(a), false) => Expr::from_node(Node::Binary(BinaryOp::Add, a, term)),
                (Some(a), true) => Expr::from_node(Node::Binary(BinaryOp::Sub, a, term)),
            });
        }
        acc.unwrap_or_else(Expr::zero)
    }

    /// Zero test that first clears multi-term denominators, so that
    /// `p * (1/p) - 1` is recognised. Never true for expressions containing a
    /// division by an identically-zero polynomial.
    pub fn is_identically_zero(&self) -> bool {
        let mut p = self.clone();
        loop {
            if p.is_zero() {
                return true;
            }
            let Some((den, k)) = p.first_denominator() else {
                return false;
            };
            if den.is_zero() {
                return false;
            }
            p = p.clear_denominator(&den, k);
        }
    }

    fn first_denominator(&self) -> Option<(Poly, i32)> {
        let mut found: Option<(Poly, i32)> = None;
        for m in self.terms.keys() {
            for (a, &e) in &m.atoms {
                if let Atom::Recip(den) = a {
                    match &mut found {
                        None => found = Some((den.clone(), e)),
                        Some((d, k)) if d == den => *k = (*k).max(e),
                        Some(_) => {}
                    }
                }
            }
        }
        found
    }

    /// Multiplies by `den^k`, cancelling `1/den` atoms exactly.
    fn clear_denominator(&self, den: &Poly, k: i32) -> Poly {
        let key = Atom::Recip(den.clone());
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut rest = m.clone();
            let e = rest.atoms.remove(&key).unwrap_or(0);
            let term = Poly::monomial(rest, c.clone());
            out = out.add(&term.mul(&den.pow_int((k - e) as i64)));
        }
        out
    }

    /// True if `var` occurs anywhere, including inside atoms and exponentials.
    pub fn mentions(&self, var: &str) -> bool {
        self.terms.keys().any(|m| m.mentions(var))
    }

    pub fn vars(&self) -> BTreeSet<String> {
        self.to_expr().free_vars()
    }

    /// Groups terms by their exponents in `vars`, returning the coefficient of
    /// each distinct monomial in those variables.
    ///
    /// Returns `None` if any of `vars` occurs inside an atom or exponential,
    /// i.e. the expression is not a Laurent polynomial in `vars`.
    pub fn split_by(&self, vars: &[&str]) -> Option<BTreeMap<Vec<i32>, Poly>> {
        let mut out: BTreeMap<Vec<i32>, Poly> = BTreeMap::new();
        for (m, c) in &self.terms {
            let mut rest = m.clone();
            let key: Vec<i32> = vars
                .iter()
                .map(|v| rest.vars.remove(*v).unwrap_or(0))
                .collect();
            if vars.iter().any(|v| rest.mentions(v)) {
                return None;
            }
            out.entry(key).or_default().add_term(rest, c.clone());
        }
        out.retain(|_, p| !p.is_zero());
        Some(out)
    }
}

fn term_expr(m: &Monomial, coeff: &BigRational) -> Expr {
    let mut num: Vec<Expr> = Vec::new();
    let mut den: Vec<Expr> = Vec::new();
    for (v, &e) in &m.vars {
        let base = Expr::var(v);
        if e > 0 {
            num.push(base.powi(e as i64));
        } else {
            den.push(base.powi(-e as i64));
        }
    }
    for (a, &e) in &m.atoms {
        let (base, e) = match a {
            Atom::Sin(p) => (p.to_expr().sin(), e),
            Atom::Cos(p) => (p.to_expr().cos(), e),
            Atom::Sqrt(p) => (p.to_expr().sqrt(), e),
            Atom::Recip(p) => (p.to_expr(), -e),
        };
        if e > 0 {
            num.push(base.powi(e as i64));
        } else {
            den.push(base.powi(-e as i64));
        }
    }
    if let Some(arg) = &m.exp {
        num.push(arg.to_expr().exp());
    }
    let mut numerator = Expr::exact(coeff.clone());
    for f in num {
        numerator = numerator.mul(&f);
    }
    if den.is_empty() {
        numerator
    } else {
        numerator.div(&Expr::product(den))
    }
}

fn exact_sqrt(c: &BigRational) -> Option<BigRational> {
    if c.is_negative() {
        return None;
    }
    let root = |n: &BigInt| {
        let r = n.sqrt();
        (&r * &r == *n).then_some(r)
    };
    Some(BigRational::new(root(c.numer())?, root(c.denom())?))
}
