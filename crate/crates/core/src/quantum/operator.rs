use num_complex::Complex64;

use super::{BandedOperator, QuantumError, Quantizer};
use crate::classical::HamiltonianSystem;
use crate::expr::{Binding, CompiledExpr, Expr};

/// A phase-space function `a(t)p² + b(x,t)p + V(x,t)` of one degree of
/// freedom, quantized with the symmetric ordering `(b p̂ + p̂ b)/2`.
#[derive(Debug, Clone)]
pub struct OperatorSymbol {
    pub coord: String,
    pub time: String,
    pub kinetic: Expr,
    pub drift: Expr,
    pub potential: Expr,
    pub params: Binding,
}

impl OperatorSymbol {
    pub fn from_phase(f: &Expr, hsys: &HamiltonianSystem) -> Result<Self, QuantumError> {
        if hsys.coords().len() != 1 {
            return Err(QuantumError::Unsupported(format!(
                "{} degrees of freedom; the grid is one-dimensional",
                hsys.coords().len()
            )));
        }
        let (x, p) = (hsys.coords()[0].as_str(), hsys.momenta()[0].as_str());
        let parts = f
            .canonical()
            .split_by(&[p])
            .ok_or_else(|| QuantumError::Unsupported(format!("`{p}` inside a function")))?;
        let mut coeff = [Expr::zero(), Expr::zero(), Expr::zero()];
        for (key, poly) in parts {
            match key[0] {
                k @ 0..=2 => coeff[k as usize] = poly.to_expr(),
                k => return Err(QuantumError::Unsupported(format!("{p}^{k} term"))),
            }
        }
        let [potential, drift, kinetic] = coeff;
        if kinetic.contains_var(x) {
            return Err(QuantumError::Unsupported(format!(
                "{p}^2 coefficient `{kinetic}` depends on {x}"
            )));
        }
        let allowed = |v: &String| v == x || v == hsys.time() || hsys.params().contains(v);
        for e in [&kinetic, &drift, &potential] {
            if let Some(v) = e.free_vars().into_iter().find(|v| !allowed(v)) {
                return Err(QuantumError::Unsupported(format!("unexpected variable `{v}`")));
            }
        }
        Ok(OperatorSymbol {
            coord: x.to_string(),
            time: hsys.time().to_string(),
            kinetic,
            drift,
            potential,
            params: hsys.params().clone(),
        })
    }

    pub fn compile(&self, q: &Quantizer) -> Result<OperatorFamily, QuantumError> {
        let slots = [self.coord.as_str(), self.time.as_str()];
        let c = |e: &Expr| CompiledExpr::new(e, &slots, &self.params);
        Ok(OperatorFamily {
            quantizer: q.clone(),
            kinetic: c(&self.kinetic)?,
            drift: (!self.drift.is_const_zero()).then(|| c(&self.drift)).transpose()?,
            potential: c(&self.potential)?,
        })
    }
}

/// Time-dependent grid operator `Â(t)` ready for assembly.
#[derive(Debug, Clone)]
pub struct OperatorFamily {
    quantizer: Quantizer,
    kinetic: CompiledExpr,
    drift: Option<CompiledExpr>,
    potential: CompiledExpr,
}

impl OperatorFamily {
    pub fn new(f: &Expr, hsys: &HamiltonianSystem, q: &Quantizer) -> Result<Self, QuantumError> {
        OperatorSymbol::from_phase(f, hsys)?.compile(q)
    }

    /// `Ĥ(t)` of a one-dimensional Hamiltonian system.
    pub fn hamiltonian(hsys: &HamiltonianSystem, q: &Quantizer) -> Result<Self, QuantumError> {
        Self::new(hsys.hamiltonian(), hsys, q)
    }

    pub fn quantizer(&self) -> &Quantizer {
        &self.quantizer
    }

    /// `−ħ²a(t)∂² − iħ(b∂ + ∂b)/2 + V` with the stencil's `∂`, `∂²` and
    /// zero values beyond the grid ends.
    pub fn at(&self, t: f64) -> Result<BandedOperator, QuantumError> {
        let q = &self.quantizer;
        let (grid, hbar) = (q.grid, q.hbar);
        let n = grid.len();
        let w = q.stencil.half_width();
        let dx = grid.dx();
        let d2 = q.stencil.second();
        let d1 = q.stencil.first();

        let a = self.kinetic.eval(&[0.0, t])?;
        let kinetic_scale = -hbar * hbar * a / (dx * dx);
        let b: Option<Vec<f64>> = self
            .drift
            .as_ref()
            .map(|d| grid.points().map(|x| d.eval(&[x, t])).collect())
            .transpose()?;

        let mut op = BandedOperator::zeros(n, w);
        for j in 0..n {
            let lo = j.saturating_sub(w);
            let hi = (j + w).min(n - 1);
            for k in lo..=hi {
                let s = k + w - j;
                let mut v = Complex64::new(kinetic_scale * d2[s], 0.0);
                if let Some(b) = &b {
                    v += Complex64::new(0.0, -hbar * 0.5 * (b[j] + b[k]) * d1[s] / dx);
                }
                op.set(j, k, v);
            }
            let x = grid.x(j);
            op.add_to(j, j, Complex64::new(self.potential.eval(&[x, t])?, 0.0));
        }
        Ok(op)
    }
}
