//! Conserved quantities of explicitly time-dependent Lagrangian systems.
//!
//! Time is promoted to a configuration variable, symmetry generators of the
//! resulting reparametrization-invariant Lagrangian are found by solving the
//! Noether determining equation over an ansatz basis, and the associated
//! charges are checked classically (RK4 drift) and quantum mechanically (the
//! time-dependent Schrödinger states are eigenstates of the quantized charge).

pub mod classical;
pub mod dynamics;
pub mod noether;
pub mod parametrize;
pub mod quantum;
pub mod registry;
pub mod expr;

pub use expr::{parse, Binding, Expr};
