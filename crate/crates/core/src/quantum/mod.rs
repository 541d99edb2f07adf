//! One-dimensional grid quantization: Hamiltonian and charge operators,
//! analytic damped-oscillator states, Crank–Nicolson propagation and the
//! eigenstate checks built on them.

pub mod banded;
mod checks;
mod operator;
mod states;
pub mod stencil;

use std::io::{self, Write};
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::classical::ClassicalError;
use crate::expr::EvalError;
use crate::registry::UnknownStrategy;

pub use banded::BandedOperator;
pub use checks::{
    conservation_defect, constraint_check, eigencheck, fidelity, propagate_cn, tdse_residual, EigenCheck, PropagationStep,
};
pub use operator::{OperatorFamily, OperatorSymbol};
pub use states::{analytic_dho_state, hermite, log_normalization, DhoParams};
pub use stencil::{stencils, Stencil};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantumError {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("ω² = ω₀² − Γ² = {omega2} ≤ 0: the analytic states need an underdamped oscillator")]
    Overdamped { omega2: f64 },
    #[error("operator outside the supported class: {0}")]
    Unsupported(String),
    #[error("wavefunction has zero norm")]
    ZeroNorm,
    #[error("Crank–Nicolson solve broke down at step {step}")]
    SolveBreakdown { step: usize },
    #[error("grids or times do not match: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Classical(#[from] ClassicalError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Strategy(#[from] UnknownStrategy),
}

/// Uniform grid `x_j = x_min + j·Δx`, `j = 0..n`, including both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self, QuantumError> {
        if n < 16 {
            return Err(QuantumError::Grid(format!("N = {n} < 16")));
        }
        if !(x_min.is_finite() && x_max.is_finite() && x_min < x_max) {
            return Err(QuantumError::Grid(format!("[{x_min}, {x_max}] is not an interval")));
        }
        Ok(Grid1D { x_min, x_max, n })
    }

    /// `[−half, half]`.
    pub fn symmetric(half: f64, n: usize) -> Result<Self, QuantumError> {
        Self::new(-half, half, n)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n - 1) as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx()
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|j| self.x(j))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Wavefunction {
    pub grid: Grid1D,
    pub t: f64,
    pub values: Vec<Complex64>,
}

impl Wavefunction {
    pub fn new(grid: Grid1D, t: f64, values: Vec<Complex64>) -> Self {
        assert_eq!(grid.len(), values.len());
        Wavefunction { grid, t, values }
    }

    /// Trapezoidal `∫|ψ|² dx`.
    pub fn norm_sqr(&self) -> f64 {
        let n = self.values.len();
        let inner: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        let ends = 0.5 * (self.values[0].norm_sqr() + self.values[n - 1].norm_sqr());
        (inner - ends) * self.grid.dx()
    }

    /// Plain sum `Σ conj(ψ_j) φ_j`.
    pub fn dot(&self, other: &[Complex64]) -> Complex64 {
        dot(&self.values, other)
    }

    /// Writes `x,re,im` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "x,re,im")?;
        for (x, v) in self.grid.points().zip(&self.values) {
            writeln!(w, "{x:.16e},{:.16e},{:.16e}", v.re, v.im)?;
        }
        Ok(())
    }
}

pub(crate) fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm2(a: &[Complex64]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Grid, stencil and `ħ` shared by every operator of one quantization.
#[derive(Clone)]
pub struct Quantizer {
    pub grid: Grid1D,
    pub stencil: Arc<dyn Stencil>,
    pub hbar: f64,
}

impl Quantizer {
    /// Stencil by registry name (`None` for the default).
    pub fn new(grid: Grid1D, stencil: Option<&str>, hbar: f64) -> Result<Self, QuantumError> {
        let stencil: Arc<dyn Stencil> = Arc::from(stencils().create_or_default(stencil)?);
        Ok(Quantizer { grid, stencil, hbar })
    }
}

impl std::fmt::Debug for Quantizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Quantizer")
            .field("grid", &self.grid)
            .field("stencil", &self.stencil.name())
            .field("hbar", &self.hbar)
            .finish()
    }
}
