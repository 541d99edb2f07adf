use std::f64::consts::PI;

use log::warn;
use num_complex::Complex64;

use super::{Grid1D, QuantumError, Wavefunction};

/// Physical constants of the damped oscillator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DhoParams {
    pub m: f64,
    pub omega0: f64,
    pub gamma: f64,
    pub hbar: f64,
}

impl DhoParams {
    /// `ω = √(ω₀² − Γ²)`.
    pub fn omega(&self) -> Result<f64, QuantumError> {
        let omega2 = self.omega0 * self.omega0 - self.gamma * self.gamma;
        if omega2 > 0.0 {
            Ok(omega2.sqrt())
        } else {
            Err(QuantumError::Overdamped { omega2 })
        }
    }

    /// `(n + ½)ħω`.
    pub fn eigenvalue(&self, n: u32) -> Result<f64, QuantumError> {
        Ok((n as f64 + 0.5) * self.hbar * self.omega()?)
    }

    /// Oscillator length `√(ħ/(mω))`.
    pub fn length(&self) -> Result<f64, QuantumError> {
        Ok((self.hbar / (self.m * self.omega()?)).sqrt())
    }

    /// `[−12, 12]·√(ħ/(mω))` with `n` points.
    pub fn default_grid(&self, n: usize) -> Result<Grid1D, QuantumError> {
        Grid1D::symmetric(12.0 * self.length()?, n)
    }
}

/// Physicists' Hermite polynomial `H_n(y)`.
pub fn hermite(n: u32, y: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 2.0 * y);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let next = 2.0 * y * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `ln N_n` with `N_n = (mω/πħ)^{1/4} / √(2ⁿ n!)`.
pub fn log_normalization(n: u32, m_omega_over_hbar: f64) -> f64 {
    let log_fact: f64 = (2..=n).map(|k| (k as f64).ln()).sum();
    0.25 * (m_omega_over_hbar / PI).ln() - 0.5 * (n as f64 * 2f64.ln() + log_fact)
}

/// `ψ_n(x, t) = N_n H_n(√(mω/ħ)e^{Γt}x) exp(−(m/2ħ)(ω + iΓ)e^{2Γt}x²)
/// exp(−i(n + ½)ωt + Γt/2)`.
pub fn analytic_dho_state(n: u32, p: &DhoParams, grid: &Grid1D, t: f64) -> Result<Wavefunction, QuantumError> {
    let omega = p.omega()?;
    let k = p.m * omega / p.hbar;
    let scale = k.sqrt() * (p.gamma * t).exp();
    let width = Complex64::new(omega, p.gamma) * (p.m / (2.0 * p.hbar) * (2.0 * p.gamma * t).exp());
    let phase = Complex64::new(0.5 * p.gamma * t, -(n as f64 + 0.5) * omega * t);
    let prefactor = (log_normalization(n, k)).exp() * phase.exp();
    let values = grid
        .points()
        .map(|x| prefactor * hermite(n, scale * x) * (-width * x * x).exp())
        .collect();
    let psi = Wavefunction::new(*grid, t, values);
    let deficit = (psi.norm_sqr() - 1.0).abs();
    if deficit > 1e-6 {
        warn!("ψ_{n} at t = {t} has norm deficit {deficit:e}; the grid may be too small or too coarse");
    }
    Ok(psi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(gamma: f64) -> DhoParams {
        DhoParams {
            m: 1.0,
            omega0: 1.0,
            gamma,
            hbar: 1.0,
        }
    }

    #[test]
    fn hermite_values() {
        assert_eq!(hermite(0, 0.3), 1.0);
        assert_eq!(hermite(1, 0.3), 0.6);
        assert!((hermite(2, 0.3) - (4.0 * 0.09 - 2.0)).abs() < 1e-15);
        assert!((hermite(3, 0.5) - (8.0 * 0.125 - 12.0 * 0.5)).abs() < 1e-15);
    }

    #[test]
    fn log_normalization_handles_large_n() {
        let direct = (1.0 / PI).powf(0.25) / (2f64.powi(5) * 120.0).sqrt();
        assert!((log_normalization(5, 1.0).exp() - direct).abs() < 1e-15);
        assert!(log_normalization(200, 1.0).is_finite());
    }

    #[test]
    fn ground_state_gaussian() {
        let p = params(0.0);
        let grid = p.default_grid(2048).unwrap();
        let psi = analytic_dho_state(0, &p, &grid, 0.0).unwrap();
        for (x, v) in grid.points().zip(&psi.values).step_by(97) {
            let expected = PI.powf(-0.25) * (-x * x / 2.0).exp();
            assert!((v.re - expected).abs() < 1e-15 && v.im == 0.0);
        }
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn damped_frequency_enters_width_and_normalization() {
        let p = params(0.6);
        assert!((p.omega().unwrap() - 0.8).abs() < 1e-15);
        let grid = p.default_grid(1025).unwrap();
        let psi = analytic_dho_state(0, &p, &grid, 0.0).unwrap();
        let centre = psi.values[grid.len() / 2];
        assert!((centre.norm() - (0.8 / PI).powf(0.25)).abs() < 1e-6);
    }

    #[test]
    fn norm_is_time_independent() {
        let p = params(0.1);
        let grid = p.default_grid(2048).unwrap();
        for n in 0..=4 {
            for t in [0.0, 1.0, 2.0] {
                let psi = analytic_dho_state(n, &p, &grid, t).unwrap();
                assert!((psi.norm_sqr() - 1.0).abs() < 1e-8, "n={n} t={t}");
            }
        }
    }

    #[test]
    fn overdamped_is_rejected() {
        let p = DhoParams {
            gamma: 2.0,
            ..params(0.0)
        };
        assert!(matches!(p.omega(), Err(QuantumError::Overdamped { .. })));
    }
}
