//! Noether variations and charges of parametrized systems, and automatic
//! discovery of symmetry generators from an ansatz basis.

pub mod nullspace;

use std::collections::BTreeMap;
use std::fmt;

use log::warn;
use nalgebra::DMatrix;
use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::classical::{euler_lagrange, legendre, total_time_derivative, ClassicalError, HamiltonianSystem};
use crate::expr::{Binding, CompiledExpr, Expr};
use crate::parametrize::ParametrizedSystem;
use crate::registry::UnknownStrategy;

pub use nullspace::{NullSpace, NullSpaceSolver};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NoetherError {
    #[error(transparent)]
    Classical(#[from] ClassicalError),
    #[error(transparent)]
    Strategy(#[from] UnknownStrategy),
    #[error("ansatz basis is empty")]
    EmptyBasis,
    #[error("ansatz basis has {got} coordinate lists, system has {expected} coordinates")]
    BasisShape { expected: usize, got: usize },
    #[error("ansatz term `{0}` depends on a velocity")]
    VelocityInBasis(String),
    #[error("ansatz term `{term}` uses `{var}`, which is not a coordinate or parameter")]
    UnknownVariable { term: String, var: String },
    #[error("Noether variation is not polynomial in the velocities")]
    NotPolynomial,
}

/// Infinitesimal point transformation `(ξ⁰, ξ^i)` on `(q⁰, q^i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryGenerator {
    pub xi0: Expr,
    pub xi: Vec<Expr>,
}

impl SymmetryGenerator {
    pub fn new(xi0: Expr, xi: Vec<Expr>) -> Self {
        SymmetryGenerator { xi0, xi }
    }

    /// Components in the order `(ξ⁰, ξ¹, …)`.
    pub fn components(&self) -> impl Iterator<Item = &Expr> {
        std::iter::once(&self.xi0).chain(&self.xi)
    }

    pub fn scaled(&self, c: &Expr) -> SymmetryGenerator {
        SymmetryGenerator {
            xi0: c.mul(&self.xi0).simplify(),
            xi: self.xi.iter().map(|x| c.mul(x).simplify()).collect(),
        }
    }

    pub fn bind_exact(&self, params: &Binding) -> SymmetryGenerator {
        SymmetryGenerator {
            xi0: self.xi0.bind_exact(params),
            xi: self.xi.iter().map(|x| x.bind_exact(params)).collect(),
        }
    }

    /// True if the two generators agree identically.
    pub fn same_as(&self, other: &SymmetryGenerator) -> bool {
        self.xi.len() == other.xi.len() && self.components().zip(other.components()).all(|(a, b)| a.sub(b).is_zero())
    }
}

impl fmt::Display for SymmetryGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.xi0)?;
        for x in &self.xi {
            write!(f, ", {x}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone)]
pub struct ConservedQuantity {
    /// `Q(q, p, t) = −ξ⁰H + ξ^i p_i`.
    pub phase: Expr,
    /// `Q(q, q̇, t)` via `p = ∂L/∂q̇`.
    pub velocity: Expr,
    pub generator: SymmetryGenerator,
    pub label: String,
    /// Whether the generator's Noether variation vanishes identically.
    pub certified: bool,
}

/// Candidate terms for each generator component.
#[derive(Debug, Clone, PartialEq)]
pub struct AnsatzBasis {
    pub basis0: Vec<Expr>,
    pub basis: Vec<Vec<Expr>>,
}

impl AnsatzBasis {
    /// `ξ⁰ ∈ span{1, q⁰}`, `ξ^i ∈ span{1, q^1..q^n, q⁰}`.
    pub fn default_for(ps: &ParametrizedSystem) -> Self {
        let one = Expr::one();
        let time = Expr::var(ps.time_coord());
        let mut spatial = vec![one.clone()];
        spatial.extend(ps.origin().coords().iter().map(|c| Expr::var(c)));
        spatial.push(time.clone());
        AnsatzBasis {
            basis0: vec![one, time],
            basis: vec![spatial; ps.origin().dof()],
        }
    }

    pub fn unknowns(&self) -> usize {
        self.basis0.len() + self.basis.iter().map(Vec::len).sum::<usize>()
    }

    fn validate(&self, ps: &ParametrizedSystem) -> Result<(), NoetherError> {
        if self.basis.len() != ps.origin().dof() {
            return Err(NoetherError::BasisShape {
                expected: ps.origin().dof(),
                got: self.basis.len(),
            });
        }
        if self.unknowns() == 0 {
            return Err(NoetherError::EmptyBasis);
        }
        for term in self.basis0.iter().chain(self.basis.iter().flatten()) {
            for var in term.free_vars() {
                if ps.velocities().contains(&var) {
                    return Err(NoetherError::VelocityInBasis(term.to_string()));
                }
                if !ps.coords().contains(&var) && !ps.origin().params().contains(&var) {
                    return Err(NoetherError::UnknownVariable {
                        term: term.to_string(),
                        var,
                    });
                }
            }
        }
        Ok(())
    }

    /// Generator with coefficient vector `c` laid out as `basis0` then each `basis[i]`.
    pub fn combine(&self, c: &[Expr]) -> SymmetryGenerator {
        assert_eq!(c.len(), self.unknowns());
        let mut it = c.iter();
        let mut span = |terms: &[Expr]| {
            Expr::sum(terms.iter().map(|b| it.next().expect("length checked").mul(b))).simplify()
        };
        let xi0 = span(&self.basis0);
        let xi = self.basis.iter().map(|b| span(b)).collect();
        SymmetryGenerator { xi0, xi }
    }
}

/// Settings for [`solve_determining`].
#[derive(Debug, Clone)]
pub struct SamplerConfig {
    pub seed: u64,
    /// Collocation points per unknown coefficient.
    pub points_per_unknown: usize,
    pub coord_range: (f64, f64),
    pub time_range: (f64, f64),
    /// Spectrum values at or below `rel_tol · max` count as zero.
    pub rel_tol: f64,
    /// Warn when the spectrum gap at the rank cut is below this ratio.
    pub gap_warning: f64,
    pub max_denominator: u32,
    pub snap_tol: f64,
    /// Name in [`nullspace::solvers`].
    pub solver: String,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            seed: 0,
            points_per_unknown: 20,
            coord_range: (-2.0, 2.0),
            time_range: (0.0, 2.0),
            rel_tol: 1e-10,
            gap_warning: 1e4,
            max_denominator: 64,
            snap_tol: 1e-9,
            solver: "svd".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DeterminingSolution {
    /// Generators that passed the exact post-filter.
    pub generators: Vec<SymmetryGenerator>,
    /// Null vectors whose rationalized generator failed the exact filter.
    pub rejected: Vec<Vec<f64>>,
    pub null_space: NullSpace,
    pub rows: usize,
    pub warnings: Vec<String>,
}

/// `ξ(L̄) = ξ^A ∂L̄/∂q^A + ξ̇^A ∂L̄/∂q̇^A` with `ξ̇^A = q̇^B ∂ξ^A/∂q^B`, simplified.
pub fn noether_variation(ps: &ParametrizedSystem, g: &SymmetryGenerator) -> Expr {
    raw_variation(ps, g).simplify()
}

fn raw_variation(ps: &ParametrizedSystem, g: &SymmetryGenerator) -> Expr {
    let lbar = ps.lbar();
    let mut out = Expr::zero();
    for (xi, (q, qd)) in g.components().zip(ps.coords().iter().zip(ps.velocities())) {
        let xi_dot = Expr::sum(
            ps.coords()
                .iter()
                .zip(ps.velocities())
                .map(|(qb, qbd)| Expr::var(qbd).mul(&xi.diff(qb))),
        );
        out = out.add(&xi.mul(&lbar.diff(q))).add(&xi_dot.mul(&lbar.diff(qd)));
    }
    out
}

/// Charge `Q = −ξ⁰H + ξ^i p_i` in phase-space and velocity form.
pub fn charge(ps: &ParametrizedSystem, g: &SymmetryGenerator) -> Result<ConservedQuantity, NoetherError> {
    let hsys = legendre(ps.origin())?;
    let mut q = g.xi0.neg().mul(hsys.hamiltonian());
    for (xi, p) in g.xi.iter().zip(hsys.momenta()) {
        q = q.add(&xi.mul(&Expr::var(p)));
    }
    let phase = q.simplify();
    let velocity = hsys.to_velocity_form(&phase);
    let certified = raw_variation(&ps.bind_exact(), &g.bind_exact(ps.origin().params())).is_zero();
    if !certified {
        warn!("generator {g} is not a symmetry; its charge need not be conserved");
    }
    Ok(ConservedQuantity {
        phase,
        velocity,
        label: format!("Q{g}"),
        generator: g.clone(),
        certified,
    })
}

/// `∂Q/∂t + {Q, H}`, simplified; zero certifies conservation.
pub fn verify_conserved(cq: &ConservedQuantity, hsys: &HamiltonianSystem) -> Expr {
    total_time_derivative(&cq.phase, hsys)
}

/// `dQ/dτ − ξ(L̄) + ξ^A δL̄/δq^A` with `Q = ξ^A ∂L̄/∂q̇^A`, simplified.
/// Vanishes identically for every generator, symmetry or not.
pub fn noether_identity_defect(ps: &ParametrizedSystem, g: &SymmetryGenerator) -> Expr {
    let lifted = ps.as_lagrangian_system();
    let q = Expr::sum(g.components().zip(ps.velocities()).map(|(xi, v)| xi.mul(&ps.lbar().diff(v))));
    let el = euler_lagrange(&lifted);
    let mut out = lifted.total_derivative(&q).sub(&raw_variation(ps, g));
    for (xi, r) in g.components().zip(&el) {
        out = out.add(&xi.mul(r));
    }
    out.simplify()
}

/// Finds the generators in the span of `basis` whose Noether variation
/// vanishes identically.
///
/// Parameters are bound to their exact decimal values. The variation of each
/// basis element is split into coefficients of velocity monomials, which are
/// collocated at random configurations; the null space of the stacked system
/// is reduced to echelon form, normalized, rationalized, and filtered by the
/// exact zero test.
pub fn solve_determining(
    ps: &ParametrizedSystem,
    basis: &AnsatzBasis,
    cfg: &SamplerConfig,
) -> Result<DeterminingSolution, NoetherError> {
    basis.validate(ps)?;
    let solver = nullspace::solvers().create(&cfg.solver)?;
    let params = ps.origin().params().clone();
    let bound = ps.bind_exact();
    let k = basis.unknowns();
    let unit = |j: usize| {
        let c: Vec<Expr> = (0..k).map(|i| if i == j { Expr::one() } else { Expr::zero() }).collect();
        basis.combine(&c).bind_exact(&params)
    };

    let vel_refs: Vec<&str> = bound.velocities().iter().map(String::as_str).collect();
    let mut coefficient: BTreeMap<Vec<i32>, Vec<Expr>> = BTreeMap::new();
    for j in 0..k {
        let parts = raw_variation(&bound, &unit(j))
            .canonical()
            .split_by(&vel_refs)
            .ok_or(NoetherError::NotPolynomial)?;
        for (key, poly) in parts {
            coefficient.entry(key).or_insert_with(|| vec![Expr::zero(); k])[j] = poly.to_expr();
        }
    }

    let slots: Vec<&str> = bound.coords().iter().map(String::as_str).collect();
    let compiled: Vec<Vec<CompiledExpr>> = coefficient
        .values()
        .map(|row| {
            row.iter()
                .map(|e| {
                    CompiledExpr::new(e, &slots, &Binding::new()).map_err(|_| {
                        let var = e.free_vars().into_iter().find(|v| !slots.contains(&v.as_str()));
                        ClassicalError::UnboundVariable(var.unwrap_or_default())
                    })
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let points: Vec<Vec<f64>> = (0..cfg.points_per_unknown.max(1) * k)
        .map(|_| {
            let mut p = vec![rng.random_range(cfg.time_range.0..=cfg.time_range.1)];
            p.extend((1..slots.len()).map(|_| rng.random_range(cfg.coord_range.0..=cfg.coord_range.1)));
            p
        })
        .collect();

    let rows: Vec<Vec<f64>> = points
        .par_iter()
        .flat_map_iter(|p| {
            compiled.iter().filter_map(move |funcs| {
                let row: Vec<f64> = funcs.iter().map(|f| f.eval(p).unwrap_or(f64::NAN)).collect();
                let scale = row.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
                (scale > 0.0 && scale.is_finite()).then(|| row.iter().map(|x| x / scale).collect())
            })
        })
        .collect();

    let matrix = DMatrix::from_fn(rows.len(), k, |i, j| rows[i][j]);
    let null_space = solver.null_space(&matrix, cfg.rel_tol);
    let mut warnings = Vec::new();
    if null_space.gap < cfg.gap_warning {
        let msg = format!(
            "ambiguous rank {} of {}: spectrum gap {:e} below {:e}",
            null_space.rank, k, null_space.gap, cfg.gap_warning
        );
        warn!("{msg}");
        warnings.push(msg);
    }

    let mut generators = Vec::new();
    let mut rejected = Vec::new();
    for v in nullspace::rref(&null_space.basis, 1e-9) {
        let v = nullspace::normalize(&v, basis.basis0.len());
        let coeffs: Vec<Expr> = v.iter().map(|&c| snap(c, &params, cfg)).collect();
        let g = basis.combine(&coeffs);
        if raw_variation(&bound, &g.bind_exact(&params)).is_zero() {
            generators.push(g);
        } else {
            let msg = format!("null vector {v:?} rejected by the exact symmetry check");
            warn!("{msg}");
            warnings.push(msg);
            rejected.push(v);
        }
    }

    Ok(DeterminingSolution {
        generators,
        rejected,
        null_space,
        rows: rows.len(),
        warnings,
    })
}

/// Exact coefficient close to `c`: a small rational, or a small rational
/// multiple of one parameter when that is the simpler description.
fn snap(c: f64, params: &Binding, cfg: &SamplerConfig) -> Expr {
    let complexity = |r: &num_rational::BigRational| r.numer().abs() + r.denom();
    let plain = nullspace::rationalize(c, cfg.max_denominator, cfg.snap_tol);
    let mut best: Option<(num_bigint::BigInt, Expr)> = plain.map(|r| (complexity(&r), Expr::exact(r)));
    for (name, value) in params.iter() {
        if value == 0.0 {
            continue;
        }
        if let Some(r) = nullspace::rationalize(c / value, cfg.max_denominator, cfg.snap_tol / value.abs()) {
            let cost = complexity(&r);
            if best.as_ref().is_none_or(|(b, _)| cost < *b) {
                best = Some((cost, Expr::exact(r).mul(&Expr::var(name))));
            }
        }
    }
    best.map(|(_, e)| e).unwrap_or_else(|| Expr::decimal(c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::LagrangianSystem;
    use crate::expr::parse;
    use crate::parametrize::lift;

    fn bateman(gamma: f64) -> ParametrizedSystem {
        let l = parse("m/2*(xd^2 - w0^2*x^2)*exp(2*G*t)").unwrap();
        let params = Binding::new().with("m", 1.0).with("w0", 1.0).with("G", gamma);
        lift(&LagrangianSystem::new(&["x"], l, params).unwrap()).unwrap()
    }

    fn gen(xi0: &str, xi: &[&str]) -> SymmetryGenerator {
        SymmetryGenerator::new(parse(xi0).unwrap(), xi.iter().map(|s| parse(s).unwrap()).collect())
    }

    #[test]
    fn bateman_variations() {
        let ps = bateman(0.1);
        assert!(noether_variation(&ps, &gen("-1", &["G*x"])).is_const_zero());
        let translation = noether_variation(&ps, &gen("0", &["1"]));
        assert!(translation.sub(&parse("-m*w0^2*x*td*exp(2*G*t)").unwrap()).is_zero());
    }

    #[test]
    fn bateman_charge() {
        let ps = bateman(0.1);
        let cq = charge(&ps, &gen("-1", &["G*x"])).unwrap();
        assert!(cq.certified);
        let expected = parse("m/2*((xd + G*x)^2 + (w0^2 - G^2)*x^2)*exp(2*G*t)").unwrap();
        assert!(cq.velocity.sub(&expected).is_zero());
        let hsys = legendre(ps.origin()).unwrap();
        assert!(verify_conserved(&cq, &hsys).is_const_zero());
        let energy = charge(&ps, &gen("-1", &["0"])).unwrap();
        assert!(!energy.certified);
        assert!(!verify_conserved(&energy, &hsys).is_zero());
    }

    #[test]
    fn discovery_on_bateman() {
        let ps = bateman(0.1);
        let basis = AnsatzBasis {
            basis0: vec![Expr::one()],
            basis: vec![vec![Expr::var("x")]],
        };
        for solver in ["svd", "qr"] {
            let cfg = SamplerConfig {
                solver: solver.into(),
                ..Default::default()
            };
            let sol = solve_determining(&ps, &basis, &cfg).unwrap();
            assert_eq!(sol.generators.len(), 1, "{solver}");
            assert!(sol.generators[0].same_as(&gen("-1", &["G*x"])), "{}", sol.generators[0]);
            assert_eq!(sol.generators[0].to_string(), "(-1, G*x)");
        }
        let sol = solve_determining(&ps, &AnsatzBasis::default_for(&ps), &SamplerConfig::default()).unwrap();
        assert_eq!(sol.generators.len(), 1);
        assert!(sol.warnings.is_empty());
    }

    #[test]
    fn discovery_on_harmonic_and_free_particle() {
        let ho = bateman(0.0);
        let basis = AnsatzBasis {
            basis0: vec![Expr::one()],
            basis: vec![vec![Expr::var("x")]],
        };
        let sol = solve_determining(&ho, &basis, &SamplerConfig::default()).unwrap();
        assert_eq!(sol.generators.len(), 1);
        assert!(sol.generators[0].same_as(&gen("-1", &["0"])));

        let free = lift(
            &LagrangianSystem::new(&["x"], parse("m/2*xd^2").unwrap(), Binding::new().with("m", 2.0)).unwrap(),
        )
        .unwrap();
        let basis = AnsatzBasis {
            basis0: vec![Expr::one(), Expr::var("t")],
            basis: vec![vec![Expr::one(), Expr::var("x")]],
        };
        let sol = solve_determining(&free, &basis, &SamplerConfig::default()).unwrap();
        let found: Vec<String> = sol.generators.iter().map(ToString::to_string).collect();
        assert_eq!(found, ["(-1, 0)", "(-t, -1/2*x)", "(0, 1)"]);
    }

    #[test]
    fn no_symmetry_in_span() {
        let ps = bateman(0.1);
        let basis = AnsatzBasis {
            basis0: vec![],
            basis: vec![vec![Expr::one()]],
        };
        let sol = solve_determining(&ps, &basis, &SamplerConfig::default()).unwrap();
        assert!(sol.generators.is_empty());
    }

    #[test]
    fn basis_validation() {
        let ps = bateman(0.1);
        let bad = AnsatzBasis {
            basis0: vec![Expr::var("xd")],
            basis: vec![vec![]],
        };
        assert!(matches!(
            solve_determining(&ps, &bad, &SamplerConfig::default()),
            Err(NoetherError::VelocityInBasis(_))
        ));
        let cfg = SamplerConfig {
            solver: "lu".into(),
            ..Default::default()
        };
        assert!(matches!(
            solve_determining(&ps, &AnsatzBasis::default_for(&ps), &cfg),
            Err(NoetherError::Strategy(_))
        ));
    }

    #[test]
    fn identity_defect_vanishes_for_non_symmetries() {
        let ps = bateman(0.1);
        for g in [gen("t^2 - x", &["x*t + 1"]), gen("-1", &["G*x"]), gen("0", &["exp(t)*x"])] {
            assert!(noether_identity_defect(&ps, &g).is_const_zero(), "{g}");
        }
    }

    #[test]
    fn charge_scales_linearly() {
        let ps = bateman(0.1);
        let g = gen("-1", &["G*x"]);
        let two = Expr::int(2);
        let q1 = charge(&ps, &g).unwrap();
        let q2 = charge(&ps, &g.scaled(&two)).unwrap();
        assert!(q2.phase.sub(&two.mul(&q1.phase)).is_zero());
    }
}
