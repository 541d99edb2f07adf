use num_complex::Complex64;

use super::{dot, norm2, OperatorFamily, QuantumError, Wavefunction};

/// `‖Ĥ(t)ψ − iħ(ψ(t+δt) − ψ(t−δt))/(2δt)‖ / ‖ψ‖`.
pub fn tdse_residual(
    psi_at: &dyn Fn(f64) -> Result<Wavefunction, QuantumError>,
    h: &OperatorFamily,
    t: f64,
    dt: f64,
) -> Result<f64, QuantumError> {
    constraint_check(psi_at, h, t, dt)
}

/// `‖φ̂ψ‖/‖ψ‖` for the quantized constraint `φ̂ = −iħ∂_t + Ĥ`, with the time
/// derivative by central difference.
pub fn constraint_check(
    psi_at: &dyn Fn(f64) -> Result<Wavefunction, QuantumError>,
    h: &OperatorFamily,
    t: f64,
    dt: f64,
) -> Result<f64, QuantumError> {
    let hbar = h.quantizer().hbar;
    let psi = psi_at(t)?;
    let (later, earlier) = (psi_at(t + dt)?, psi_at(t - dt)?);
    let h_psi = h.at(t)?.apply(&psi.values);
    let factor = Complex64::new(0.0, -hbar / (2.0 * dt));
    let phi_psi: Vec<Complex64> = h_psi
        .iter()
        .zip(later.values.iter().zip(&earlier.values))
        .map(|(hp, (a, b))| hp + factor * (a - b))
        .collect();
    relative(&phi_psi, &psi.values)
}

fn relative(v: &[Complex64], psi: &[Complex64]) -> Result<f64, QuantumError> {
    let n = norm2(psi);
    if n == 0.0 {
        return Err(QuantumError::ZeroNorm);
    }
    Ok(norm2(v) / n)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenCheck {
    /// Real part of the Rayleigh quotient.
    pub q_estimate: f64,
    /// `|Im ⟨ψ,Q̂ψ⟩| / |⟨ψ,Q̂ψ⟩|`.
    pub imag_ratio: f64,
    /// `‖Q̂ψ − qψ‖ / ‖ψ‖`.
    pub residual: f64,
}

/// Rayleigh quotient of `Q̂(ψ.t)` and the eigen-residual.
pub fn eigencheck(q: &OperatorFamily, psi: &Wavefunction) -> Result<EigenCheck, QuantumError> {
    if psi.grid != q.quantizer().grid {
        return Err(QuantumError::Mismatch("wavefunction and operator grids differ".into()));
    }
    let norm = psi.dot(&psi.values).re;
    if norm == 0.0 {
        return Err(QuantumError::ZeroNorm);
    }
    let q_psi = q.at(psi.t)?.apply(&psi.values);
    let rq = psi.dot(&q_psi) / norm;
    let diff: Vec<Complex64> = q_psi.iter().zip(&psi.values).map(|(a, b)| a - rq.re * b).collect();
    Ok(EigenCheck {
        q_estimate: rq.re,
        imag_ratio: if rq.norm() == 0.0 { 0.0 } else { rq.im.abs() / rq.norm() },
        residual: relative(&diff, &psi.values)?,
    })
}

/// State handed to the observer after each Crank–Nicolson step.
#[derive(Debug)]
pub struct PropagationStep<'a> {
    pub step: usize,
    pub psi: &'a Wavefunction,
}

/// Crank–Nicolson from `psi0.t` to `t1` with the midpoint Hamiltonian:
/// `(1 + iδtĤ/2ħ)ψ_{k+1} = (1 − iδtĤ/2ħ)ψ_k`. The step is adjusted to divide
/// the interval evenly.
pub fn propagate_cn(
    psi0: &Wavefunction,
    h: &OperatorFamily,
    t1: f64,
    dt: f64,
    mut observer: impl FnMut(PropagationStep<'_>),
) -> Result<Wavefunction, QuantumError> {
    let span = t1 - psi0.t;
    if span == 0.0 {
        return Ok(psi0.clone());
    }
    if !(dt > 0.0 && span.is_finite()) {
        return Err(QuantumError::Mismatch(format!("cannot step from {} to {t1} with δt = {dt}", psi0.t)));
    }
    let steps = (span.abs() / dt - 1e-9).ceil().max(1.0) as usize;
    let step = span / steps as f64;
    let hbar = h.quantizer().hbar;
    let one = Complex64::new(1.0, 0.0);
    let half = Complex64::new(0.0, step / (2.0 * hbar));
    let n = psi0.values.len();
    let w = h.quantizer().stencil.half_width();
    let identity = super::BandedOperator::identity(n, w);

    let mut psi = psi0.clone();
    for k in 0..steps {
        let t = psi0.t + k as f64 * step;
        let hm = h.at(t + step / 2.0)?;
        let rhs = identity.combine(one, &hm, -half).apply(&psi.values);
        psi.values = identity
            .combine(one, &hm, half)
            .solve(&rhs)
            .ok_or(QuantumError::SolveBreakdown { step: k })?;
        psi.t = if k + 1 == steps { t1 } else { psi0.t + (k + 1) as f64 * step };
        observer(PropagationStep { step: k + 1, psi: &psi });
    }
    Ok(psi)
}

/// `‖(iħ ∂Q̂/∂t + [Q̂, Ĥ])ψ‖ / ‖ψ‖` at `ψ.t`, with `∂Q̂/∂t` by central
/// difference of step `dt`. Measures how well the grid operators preserve
/// the conservation law on smooth states.
pub fn conservation_defect(
    q: &OperatorFamily,
    h: &OperatorFamily,
    psi: &Wavefunction,
    dt: f64,
) -> Result<f64, QuantumError> {
    let t = psi.t;
    let hbar = q.quantizer().hbar;
    let (qt, ht) = (q.at(t)?, h.at(t)?);
    let dq = q
        .at(t + dt)?
        .combine(Complex64::new(1.0, 0.0), &q.at(t - dt)?, Complex64::new(-1.0, 0.0))
        .apply(&psi.values);
    let qh = qt.apply(&ht.apply(&psi.values));
    let hq = ht.apply(&qt.apply(&psi.values));
    let factor = Complex64::new(0.0, hbar / (2.0 * dt));
    let v: Vec<Complex64> = dq
        .iter()
        .zip(qh.iter().zip(&hq))
        .map(|(d, (a, b))| factor * d + a - b)
        .collect();
    relative(&v, &psi.values)
}

/// `|⟨a, b⟩| / (‖a‖‖b‖)`.
pub fn fidelity(a: &Wavefunction, b: &Wavefunction) -> f64 {
    dot(&a.values, &b.values).norm() / (norm2(&a.values) * norm2(&b.values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::{legendre, HamiltonianSystem, LagrangianSystem};
    use crate::expr::{parse, Binding};
    use crate::quantum::{analytic_dho_state, DhoParams, Grid1D, Quantizer};

    fn setup(gamma: f64, n: usize, stencil: &str) -> (DhoParams, HamiltonianSystem, Quantizer) {
        let p = DhoParams {
            m: 1.0,
            omega0: 1.0,
            gamma,
            hbar: 1.0,
        };
        let l = parse("m/2*(xd^2 - w0^2*x^2)*exp(2*G*t)").unwrap();
        let params = Binding::new().with("m", 1.0).with("w0", 1.0).with("G", gamma);
        let h = legendre(&LagrangianSystem::new(&["x"], l, params).unwrap()).unwrap();
        let q = Quantizer::new(p.default_grid(n).unwrap(), Some(stencil), 1.0).unwrap();
        (p, h, q)
    }

    fn charge(h: &HamiltonianSystem, q: &Quantizer) -> OperatorFamily {
        let e = parse("px^2/(2*m)*exp(-2*G*t) + G*x*px + m/2*w0^2*x^2*exp(2*G*t)").unwrap();
        OperatorFamily::new(&e, h, q).unwrap()
    }

    #[test]
    fn eigenvalues_of_the_charge() {
        let (p, h, q) = setup(0.1, 1024, "central4");
        let qf = charge(&h, &q);
        for n in [0, 3] {
            let psi = analytic_dho_state(n, &p, &q.grid, 0.5).unwrap();
            let ec = eigencheck(&qf, &psi).unwrap();
            assert!((ec.q_estimate - p.eigenvalue(n).unwrap()).abs() < 1e-5, "{ec:?}");
            assert!(ec.residual < 1e-4 && ec.imag_ratio < 1e-10, "{ec:?}");
        }
    }

    #[test]
    fn tdse_residual_converges_and_detects_noise() {
        for (stencil, factor) in [("central2", 3.5), ("central4", 12.0)] {
            let res = |n: usize| {
                let (p, h, q) = setup(0.1, n, stencil);
                let hf = OperatorFamily::hamiltonian(&h, &q).unwrap();
                let grid = q.grid;
                tdse_residual(&|t| analytic_dho_state(0, &p, &grid, t), &hf, 0.3, 1e-4).unwrap()
            };
            let (coarse, fine) = (res(256), res(512));
            assert!(coarse / fine > factor, "{stencil}: {coarse} {fine}");
        }
        let (_, h, q) = setup(0.1, 128, "central4");
        let hf = OperatorFamily::hamiltonian(&h, &q).unwrap();
        let grid = q.grid;
        let noise = |t: f64| {
            Ok(Wavefunction::new(
                grid,
                t,
                (0..grid.len()).map(|j| Complex64::new(((j * 7919) % 13) as f64 - 6.0, 0.0)).collect(),
            ))
        };
        assert!(tdse_residual(&noise, &hf, 0.0, 1e-3).unwrap() > 1.0);
    }

    #[test]
    fn stationary_state_returns_after_a_period() {
        let (p, h, q) = setup(0.0, 512, "central4");
        let hf = OperatorFamily::hamiltonian(&h, &q).unwrap();
        let psi0 = analytic_dho_state(0, &p, &q.grid, 0.0).unwrap();
        let mut norms = Vec::new();
        let end = propagate_cn(&psi0, &hf, 2.0 * std::f64::consts::PI, 1e-2, |s| norms.push(s.psi.norm_sqr())).unwrap();
        assert!(fidelity(&end, &psi0) > 1.0 - 1e-6);
        let drift = norms.iter().map(|n| (n - norms[0]).abs()).fold(0.0, f64::max);
        assert!(drift < 1e-12, "{drift}");
    }

    #[test]
    fn charge_commutes_with_evolution() {
        let (p, h, q) = setup(0.1, 512, "central4");
        let (hf, qf) = (OperatorFamily::hamiltonian(&h, &q).unwrap(), charge(&h, &q));
        for n in [0, 2] {
            let psi = analytic_dho_state(n, &p, &q.grid, 0.4).unwrap();
            let d = conservation_defect(&qf, &hf, &psi, 1e-4).unwrap();
            assert!(d < 1e-5, "n={n}: {d}");
        }
        let (_, h2, q2) = setup(0.1, 512, "central4");
        let grid2 = Grid1D::symmetric(3.0, 64).unwrap();
        let other = Quantizer { grid: grid2, ..q2 };
        let psi = analytic_dho_state(0, &p, &q.grid, 0.0).unwrap();
        assert!(eigencheck(&charge(&h2, &other), &psi).is_err());
    }
}
