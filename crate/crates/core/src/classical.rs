//! Lagrangian and Hamiltonian mechanics on symbolic expressions: equations of
//! motion, energy and its rate, the Legendre transform and Poisson brackets.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::expr::{Binding, Expr};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassicalError {
    #[error("variable `{0}` is not a coordinate, velocity, time, or declared parameter")]
    UnboundVariable(String),
    #[error("name `{0}` is declared more than once")]
    DuplicateName(String),
    #[error("system has no coordinates")]
    NoCoordinates,
    #[error("Lagrangian is not quadratic in the velocities: {0}")]
    NonQuadratic(String),
    #[error("velocity Hessian is singular (degenerate Lagrangian); parametrized systems are handled by the `parametrize` module")]
    SingularHessian,
    #[error("Legendre transform failed its consistency check")]
    LegendreInconsistent,
}

/// Suffix appended to a coordinate name to form its velocity.
pub const VELOCITY_SUFFIX: &str = "d";
/// Suffix appended to a coordinate name to form its acceleration.
pub const ACCELERATION_SUFFIX: &str = "dd";
/// Prefix prepended to a coordinate name to form its conjugate momentum.
pub const MOMENTUM_PREFIX: &str = "p";

pub fn velocity_name(coord: &str) -> String {
    format!("{coord}{VELOCITY_SUFFIX}")
}

pub fn acceleration_name(coord: &str) -> String {
    format!("{coord}{ACCELERATION_SUFFIX}")
}

pub fn momentum_name(coord: &str) -> String {
    format!("{MOMENTUM_PREFIX}{coord}")
}

/// Coordinates, velocities, time, a Lagrangian `L(q, q̇, t)` and values for
/// its physical parameters.
#[derive(Debug, Clone)]
pub struct LagrangianSystem {
    coords: Vec<String>,
    velocities: Vec<String>,
    time: String,
    lagrangian: Expr,
    params: Binding,
}

impl LagrangianSystem {
    /// Uses the default naming conventions: velocity `xd` for coordinate `x`,
    /// time `t`.
    pub fn new(coords: &[&str], lagrangian: Expr, params: Binding) -> Result<Self, ClassicalError> {
        let velocities: Vec<String> = coords.iter().map(|c| velocity_name(c)).collect();
        let vel_refs: Vec<&str> = velocities.iter().map(String::as_str).collect();
        Self::with_names(coords, &vel_refs, "t", lagrangian, params)
    }

    pub fn with_names(
        coords: &[&str],
        velocities: &[&str],
        time: &str,
        lagrangian: Expr,
        params: Binding,
    ) -> Result<Self, ClassicalError> {
        if coords.is_empty() {
            return Err(ClassicalError::NoCoordinates);
        }
        assert_eq!(coords.len(), velocities.len(), "one velocity per coordinate");
        let mut seen = BTreeSet::new();
        for name in coords
            .iter()
            .chain(velocities)
            .chain(std::iter::once(&time))
            .copied()
            .chain(params.names())
        {
            if !seen.insert(name.to_string()) {
                return Err(ClassicalError::DuplicateName(name.to_string()));
            }
        }
        if let Some(v) = lagrangian.free_vars().into_iter().find(|v| !seen.contains(v)) {
            return Err(ClassicalError::UnboundVariable(v));
        }
        Ok(LagrangianSystem {
            coords: coords.iter().map(|s| s.to_string()).collect(),
            velocities: velocities.iter().map(|s| s.to_string()).collect(),
            time: time.to_string(),
            lagrangian,
            params,
        })
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn velocities(&self) -> &[String] {
        &self.velocities
    }

    pub fn accelerations(&self) -> Vec<String> {
        self.coords.iter().map(|c| acceleration_name(c)).collect()
    }

    pub fn time(&self) -> &str {
        &self.time
    }

    pub fn lagrangian(&self) -> &Expr {
        &self.lagrangian
    }

    pub fn params(&self) -> &Binding {
        &self.params
    }

    pub fn dof(&self) -> usize {
        self.coords.len()
    }

    /// A copy with every parameter replaced by the exact decimal form of its
    /// value; the result has no parameters.
    pub fn bind_exact(&self) -> LagrangianSystem {
        LagrangianSystem {
            lagrangian: self.lagrangian.bind_exact(&self.params),
            params: Binding::new(),
            ..self.clone()
        }
    }

    /// A copy with parameter values replaced (same names required).
    pub fn with_params(&self, params: Binding) -> Result<LagrangianSystem, ClassicalError> {
        let coords: Vec<&str> = self.coords.iter().map(String::as_str).collect();
        let vels: Vec<&str> = self.velocities.iter().map(String::as_str).collect();
        Self::with_names(&coords, &vels, &self.time, self.lagrangian.clone(), params)
    }

    /// Total time derivative along a path: `∂F/∂t + q̇ ∂F/∂q + q̈ ∂F/∂q̇`.
    pub fn total_derivative(&self, f: &Expr) -> Expr {
        let mut out = f.diff(&self.time);
        for ((q, qd), qdd) in self.coords.iter().zip(&self.velocities).zip(self.accelerations()) {
            out = out
                .add(&Expr::var(qd).mul(&f.diff(q)))
                .add(&Expr::var(&qdd).mul(&f.diff(qd)));
        }
        out
    }

    /// `∂²L/∂q̇^i∂q̇^j`, simplified.
    pub fn velocity_hessian(&self) -> Vec<Vec<Expr>> {
        self.velocities
            .iter()
            .map(|vi| {
                let di = self.lagrangian.diff(vi);
                self.velocities.iter().map(|vj| di.diff(vj).simplify()).collect()
            })
            .collect()
    }

    /// True unless the velocity Hessian has identically vanishing determinant.
    pub fn is_regular(&self) -> bool {
        invert_symbolic(&self.velocity_hessian()).is_some()
    }
}

/// Euler–Lagrange residuals `∂L/∂q^i − d/dt ∂L/∂q̇^i`, one per coordinate,
/// in `q, q̇, q̈, t`. Accelerations are named by [`acceleration_name`].
pub fn euler_lagrange(sys: &LagrangianSystem) -> Vec<Expr> {
    sys.coords
        .iter()
        .zip(&sys.velocities)
        .map(|(q, qd)| {
            let momentum = sys.lagrangian.diff(qd);
            sys.lagrangian
                .diff(q)
                .sub(&sys.total_derivative(&momentum))
                .simplify()
        })
        .collect()
}

/// `q̇^i ∂L/∂q̇^i − L`.
pub fn energy(sys: &LagrangianSystem) -> Expr {
    let mut e = sys.lagrangian.neg();
    for qd in &sys.velocities {
        e = e.add(&Expr::var(qd).mul(&sys.lagrangian.diff(qd)));
    }
    e.simplify()
}

#[derive(Debug, Clone)]
pub struct EnergyRate {
    /// On-shell `dE/dt = −∂L/∂t`.
    pub rate: Expr,
    /// True when the rate vanishes identically (no explicit time dependence).
    pub conserved: bool,
}

pub fn energy_rate(sys: &LagrangianSystem) -> EnergyRate {
    let rate = sys.lagrangian.diff(&sys.time).neg().simplify();
    let conserved = rate.is_zero();
    EnergyRate { rate, conserved }
}

/// Canonical momenta `∂L/∂q̇^i`, simplified.
pub fn momenta(sys: &LagrangianSystem) -> Vec<Expr> {
    sys.velocities
        .iter()
        .map(|qd| sys.lagrangian.diff(qd).simplify())
        .collect()
}

/// Phase-space description produced by the Legendre transform.
#[derive(Debug, Clone)]
pub struct HamiltonianSystem {
    coords: Vec<String>,
    momenta: Vec<String>,
    velocities: Vec<String>,
    time: String,
    hamiltonian: Expr,
    params: Binding,
    /// `q̇^i(q, p, t)`.
    velocity_of_momenta: Vec<Expr>,
    /// `p_i(q, q̇, t) = ∂L/∂q̇^i`.
    momentum_of_velocities: Vec<Expr>,
}

impl HamiltonianSystem {
    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn momenta(&self) -> &[String] {
        &self.momenta
    }

    pub fn velocities(&self) -> &[String] {
        &self.velocities
    }

    pub fn time(&self) -> &str {
        &self.time
    }

    pub fn hamiltonian(&self) -> &Expr {
        &self.hamiltonian
    }

    pub fn params(&self) -> &Binding {
        &self.params
    }

    pub fn velocity_of_momenta(&self) -> &[Expr] {
        &self.velocity_of_momenta
    }

    pub fn momentum_of_velocities(&self) -> &[Expr] {
        &self.momentum_of_velocities
    }

    /// Rewrites a phase-space expression in velocity form via `p = ∂L/∂q̇`.
    pub fn to_velocity_form(&self, f: &Expr) -> Expr {
        let map: BTreeMap<String, Expr> = self
            .momenta
            .iter()
            .cloned()
            .zip(self.momentum_of_velocities.iter().cloned())
            .collect();
        f.substitute_all(&map).simplify()
    }

    /// Rewrites a velocity-form expression in phase-space form via `q̇(q, p, t)`.
    pub fn to_phase_form(&self, f: &Expr) -> Expr {
        let map: BTreeMap<String, Expr> = self
            .velocities
            .iter()
            .cloned()
            .zip(self.velocity_of_momenta.iter().cloned())
            .collect();
        f.substitute_all(&map).simplify()
    }
}

/// Inverse and determinant of a symbolic matrix by Gauss–Jordan elimination,
/// or `None` if the determinant is identically zero.
pub fn invert_symbolic(m: &[Vec<Expr>]) -> Option<(Vec<Vec<Expr>>, Expr)> {
    let n = m.len();
    let mut a: Vec<Vec<Expr>> = m.to_vec();
    let mut inv: Vec<Vec<Expr>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { Expr::one() } else { Expr::zero() }).collect())
        .collect();
    let mut det = Expr::one();
    for col in 0..n {
        let pivot_row = (col..n).find(|&r| !a[r][col].is_zero())?;
        if pivot_row != col {
            a.swap(pivot_row, col);
            inv.swap(pivot_row, col);
            det = det.neg();
        }
        let pivot = a[col][col].clone();
        det = det.mul(&pivot).simplify();
        for j in 0..n {
            a[col][j] = a[col][j].div(&pivot).simplify();
            inv[col][j] = inv[col][j].div(&pivot).simplify();
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone();
            for j in 0..n {
                a[r][j] = a[r][j].sub(&factor.mul(&a[col][j])).simplify();
                inv[r][j] = inv[r][j].sub(&factor.mul(&inv[col][j])).simplify();
            }
        }
    }
    Some((inv, det))
}

/// Legendre transform for Lagrangians quadratic in the velocities,
/// `L = ½ q̇ᵀA(q,t)q̇ + b(q,t)·q̇ + c(q,t)` with `A` invertible.
pub fn legendre(sys: &LagrangianSystem) -> Result<HamiltonianSystem, ClassicalError> {
    let vel_refs: Vec<&str> = sys.velocities.iter().map(String::as_str).collect();
    let parts = sys
        .lagrangian
        .canonical()
        .split_by(&vel_refs)
        .ok_or_else(|| ClassicalError::NonQuadratic("velocity inside a transcendental function".into()))?;
    for key in parts.keys() {
        if key.iter().any(|&k| k < 0) || key.iter().sum::<i32>() > 2 {
            return Err(ClassicalError::NonQuadratic(format!(
                "velocity exponents {key:?}"
            )));
        }
    }

    let hessian = sys.velocity_hessian();
    let (inv, _det) = invert_symbolic(&hessian).ok_or(ClassicalError::SingularHessian)?;

    let at_rest: BTreeMap<String, Expr> = sys
        .velocities
        .iter()
        .map(|v| (v.clone(), Expr::zero()))
        .collect();
    let momentum_of_velocities = momenta(sys);
    let linear: Vec<Expr> = momentum_of_velocities
        .iter()
        .map(|p| p.substitute_all(&at_rest).simplify())
        .collect();
    let constant = sys.lagrangian.substitute_all(&at_rest);

    let momentum_names: Vec<String> = sys.coords.iter().map(|c| momentum_name(c)).collect();
    let shifted: Vec<Expr> = momentum_names
        .iter()
        .zip(&linear)
        .map(|(p, b)| Expr::var(p).sub(b))
        .collect();
    let velocity_of_momenta: Vec<Expr> = inv
        .iter()
        .map(|row| Expr::sum(row.iter().zip(&shifted).map(|(a, s)| a.mul(s))).simplify())
        .collect();
    let kinetic = Expr::sum(shifted.iter().zip(&velocity_of_momenta).map(|(s, v)| s.mul(v)));
    let hamiltonian = Expr::rational(1, 2).mul(&kinetic).sub(&constant).simplify();

    let hsys = HamiltonianSystem {
        coords: sys.coords.clone(),
        momenta: momentum_names,
        velocities: sys.velocities.clone(),
        time: sys.time.clone(),
        hamiltonian,
        params: sys.params.clone(),
        velocity_of_momenta,
        momentum_of_velocities,
    };

    // H(q, p(q, q̇, t), t) must equal q̇·p − L identically.
    let h_of_velocities = hsys.to_velocity_form(&hsys.hamiltonian);
    if !h_of_velocities.sub(&energy(sys)).is_zero() {
        return Err(ClassicalError::LegendreInconsistent);
    }
    Ok(hsys)
}

/// `{F, G} = ∂F/∂q^i ∂G/∂p_i − ∂G/∂q^i ∂F/∂p_i`, simplified.
pub fn poisson(f: &Expr, g: &Expr, hsys: &HamiltonianSystem) -> Expr {
    let mut out = Expr::zero();
    for (q, p) in hsys.coords.iter().zip(&hsys.momenta) {
        out = out
            .add(&f.diff(q).mul(&g.diff(p)))
            .sub(&g.diff(q).mul(&f.diff(p)));
    }
    out.simplify()
}

/// `Ḟ = ∂F/∂t + {F, H}`, simplified.
pub fn total_time_derivative(f: &Expr, hsys: &HamiltonianSystem) -> Expr {
    f.diff(&hsys.time)
        .add(&poisson(f, &hsys.hamiltonian, hsys))
        .simplify()
}
