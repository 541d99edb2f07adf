//! Parametrized form of a time-dependent system: time is promoted to a
//! coordinate `q⁰` and trajectories are curves in an arbitrary parameter `τ`.
//!
//! Naming: `q⁰` reuses the original time name (`t`), its `τ`-velocity is
//! `td`, and the `τ`-velocities of the other coordinates keep their original
//! names (`xd`). The conjugate momentum of `q⁰` is `pt`.

use std::collections::BTreeMap;

use crate::classical::{legendre, momentum_name, velocity_name, ClassicalError, HamiltonianSystem, LagrangianSystem};
use crate::expr::Expr;

/// Name of the evolution parameter of a lifted system.
pub const TAU: &str = "tau";

#[derive(Debug, Clone)]
pub struct ParametrizedSystem {
    /// `q⁰` followed by the original coordinates.
    coords: Vec<String>,
    velocities: Vec<String>,
    lbar: Expr,
    theta: Vec<Expr>,
    origin: LagrangianSystem,
}

/// Primary constraint `φ = p̄₀ + H(q, q⁰, p̄) ≈ 0`.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub phi: Expr,
    /// Name of `p̄₀`.
    pub time_momentum: String,
    /// Hamiltonian of the origin system, whose `H` appears in `φ`.
    pub hamiltonian: HamiltonianSystem,
}

impl ParametrizedSystem {
    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn velocities(&self) -> &[String] {
        &self.velocities
    }

    /// `q⁰`.
    pub fn time_coord(&self) -> &str {
        &self.coords[0]
    }

    /// `q̇⁰`.
    pub fn time_velocity(&self) -> &str {
        &self.velocities[0]
    }

    pub fn lbar(&self) -> &Expr {
        &self.lbar
    }

    /// `θ^i = q̇^i / q̇⁰`.
    pub fn theta(&self) -> &[Expr] {
        &self.theta
    }

    pub fn origin(&self) -> &LagrangianSystem {
        &self.origin
    }

    /// Degree-one homogeneity defect `q̇^A ∂L̄/∂q̇^A − L̄`, simplified.
    pub fn homogeneity_defect(&self) -> Expr {
        canonical_hamiltonian(self)
    }

    /// `L̄` as an ordinary Lagrangian in the coordinates `(q⁰, q)` evolving
    /// in [`TAU`]. Its velocity Hessian is singular.
    pub fn as_lagrangian_system(&self) -> LagrangianSystem {
        let coords: Vec<&str> = self.coords.iter().map(String::as_str).collect();
        let vels: Vec<&str> = self.velocities.iter().map(String::as_str).collect();
        LagrangianSystem::with_names(&coords, &vels, TAU, self.lbar.clone(), self.origin.params().clone())
            .expect("names were validated by lift")
    }

    /// Same lift with parameters replaced by their exact values.
    pub fn bind_exact(&self) -> ParametrizedSystem {
        let params = self.origin.params();
        ParametrizedSystem {
            lbar: self.lbar.bind_exact(params),
            theta: self.theta.clone(),
            origin: self.origin.bind_exact(),
            ..self.clone()
        }
    }
}

/// `L̄ = L(q, q̇/q̇⁰, q⁰)·q̇⁰`.
pub fn lift(sys: &LagrangianSystem) -> Result<ParametrizedSystem, ClassicalError> {
    let time = sys.time().to_string();
    let time_velocity = velocity_name(&time);
    let mut coords = vec![time.clone()];
    coords.extend(sys.coords().iter().cloned());
    let mut velocities = vec![time_velocity.clone()];
    velocities.extend(sys.velocities().iter().cloned());

    for name in [&time_velocity, &TAU.to_string(), &momentum_name(&time)] {
        let clash = sys.coords().contains(name)
            || sys.velocities().contains(name)
            || sys.params().contains(name);
        if clash {
            return Err(ClassicalError::DuplicateName(name.clone()));
        }
    }

    let td = Expr::var(&time_velocity);
    let theta: Vec<Expr> = sys.velocities().iter().map(|v| Expr::var(v).div(&td)).collect();
    let map: BTreeMap<String, Expr> = sys.velocities().iter().cloned().zip(theta.iter().cloned()).collect();
    let lbar = sys.lagrangian().substitute_all(&map).mul(&td).simplify();

    Ok(ParametrizedSystem {
        coords,
        velocities,
        lbar,
        theta,
        origin: sys.clone(),
    })
}

/// `q̇⁰p̄₀ + q̇^i p̄_i − L̄` with `p̄_A = ∂L̄/∂q̇^A`, simplified. Identically zero.
pub fn canonical_hamiltonian(ps: &ParametrizedSystem) -> Expr {
    let mut h = ps.lbar.neg();
    for v in &ps.velocities {
        h = h.add(&Expr::var(v).mul(&ps.lbar.diff(v)));
    }
    h.simplify()
}

pub fn primary_constraint(ps: &ParametrizedSystem) -> Result<Constraint, ClassicalError> {
    let hamiltonian = legendre(&ps.origin)?;
    let time_momentum = momentum_name(ps.time_coord());
    let phi = Expr::var(&time_momentum).add(hamiltonian.hamiltonian()).simplify();
    Ok(Constraint {
        phi,
        time_momentum,
        hamiltonian,
    })
}
