//! Fixed-step RK4 integration of Euler–Lagrange equations and drift
//! monitoring of candidate conserved quantities along the result.

use std::collections::BTreeMap;
use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::classical::{euler_lagrange, LagrangianSystem};
use crate::expr::{Binding, CompiledExpr, EvalError, Expr};
use crate::parametrize::{ParametrizedSystem, TAU};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("equations of motion are not linear in the accelerations")]
    NonlinearAccelerations,
    #[error("acceleration solve is singular at t = {t}")]
    Singular { t: f64 },
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("initial state has {got} entries, expected {expected}")]
    Shape { expected: usize, got: usize },
}

/// `M(q, q̇, t) q̈ = f(q, q̇, t)`, compiled for evaluation over the slots
/// `[t, q.., q̇..]`.
#[derive(Debug, Clone)]
pub struct EquationsOfMotion {
    time: String,
    coords: Vec<String>,
    velocities: Vec<String>,
    params: Binding,
    mass: Vec<Vec<CompiledExpr>>,
    force: Vec<CompiledExpr>,
    /// Maps the integration variable to the physical time `(offset, rate)`.
    clock: (f64, f64),
}

impl EquationsOfMotion {
    pub fn new(sys: &LagrangianSystem) -> Result<Self, DynamicsError> {
        let residuals = euler_lagrange(sys);
        Self::from_residuals(
            &residuals,
            sys.time(),
            sys.coords(),
            sys.velocities(),
            &sys.accelerations(),
            sys.params().clone(),
            (0.0, 1.0),
        )
    }

    /// Lifted equations in the gauge `q̇⁰ = rate`, `q⁰ = t0 + rate·τ`. The
    /// state is `(q^i, dq^i/dτ)` and the integration variable is `τ`.
    pub fn parametrized(ps: &ParametrizedSystem, t0: f64, rate: f64) -> Result<Self, DynamicsError> {
        if rate == 0.0 || !rate.is_finite() {
            return Err(DynamicsError::Degenerate(format!("gauge rate {rate}")));
        }
        let lifted = ps.as_lagrangian_system();
        let accelerations = lifted.accelerations();
        let clock = Expr::decimal(t0).add(&Expr::decimal(rate).mul(&Expr::var(TAU)));
        let gauge: BTreeMap<String, Expr> = [
            (ps.time_velocity().to_string(), Expr::decimal(rate)),
            (accelerations[0].clone(), Expr::zero()),
            (ps.time_coord().to_string(), clock),
        ]
        .into_iter()
        .collect();
        let residuals: Vec<Expr> = euler_lagrange(&lifted)[1..]
            .iter()
            .map(|r| r.substitute_all(&gauge))
            .collect();
        Self::from_residuals(
            &residuals,
            TAU,
            &lifted.coords()[1..],
            &lifted.velocities()[1..],
            &accelerations[1..],
            lifted.params().clone(),
            (t0, rate),
        )
    }

    fn from_residuals(
        residuals: &[Expr],
        time: &str,
        coords: &[String],
        velocities: &[String],
        accelerations: &[String],
        params: Binding,
        clock: (f64, f64),
    ) -> Result<Self, DynamicsError> {
        let mut slots = vec![time];
        slots.extend(coords.iter().map(String::as_str));
        slots.extend(velocities.iter().map(String::as_str));
        let at_rest: BTreeMap<String, Expr> = accelerations.iter().map(|a| (a.clone(), Expr::zero())).collect();

        let mut mass = Vec::with_capacity(residuals.len());
        let mut force = Vec::with_capacity(residuals.len());
        for r in residuals {
            let mut row = Vec::with_capacity(accelerations.len());
            for a in accelerations {
                let m = r.diff(a).neg().simplify();
                if accelerations.iter().any(|b| m.contains_var(b)) {
                    return Err(DynamicsError::NonlinearAccelerations);
                }
                row.push(CompiledExpr::new(&m, &slots, &params)?);
            }
            mass.push(row);
            force.push(CompiledExpr::new(&r.substitute_all(&at_rest).simplify(), &slots, &params)?);
        }
        Ok(EquationsOfMotion {
            time: time.to_string(),
            coords: coords.to_vec(),
            velocities: velocities.to_vec(),
            params,
            mass,
            force,
            clock,
        })
    }

    pub fn dof(&self) -> usize {
        self.coords.len()
    }

    /// Physical time at integration variable `s`.
    pub fn physical_time(&self, s: f64) -> f64 {
        self.clock.0 + self.clock.1 * s
    }

    /// `q̈` at `(t, q, q̇)`.
    pub fn accelerations(&self, t: f64, q: &[f64], qd: &[f64]) -> Result<Vec<f64>, DynamicsError> {
        let mut args = Vec::with_capacity(1 + 2 * q.len());
        args.push(t);
        args.extend_from_slice(q);
        args.extend_from_slice(qd);
        let n = self.dof();
        let f: Vec<f64> = self.force.iter().map(|e| e.eval(&args)).collect::<Result<_, _>>()?;
        if n == 1 {
            let m = self.mass[0][0].eval(&args)?;
            let a = f[0] / m;
            return if a.is_finite() { Ok(vec![a]) } else { Err(DynamicsError::Singular { t }) };
        }
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = self.mass[i][j].eval(&args)?;
            }
        }
        m.lu()
            .solve(&DVector::from_vec(f))
            .map(|v| v.iter().copied().collect())
            .ok_or(DynamicsError::Singular { t })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub q: Vec<f64>,
    pub qd: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub time: String,
    pub coords: Vec<String>,
    pub velocities: Vec<String>,
    pub params: Binding,
    pub samples: Vec<Sample>,
    /// Signed step in the integration variable.
    pub h: f64,
    pub integrator: &'static str,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectories are nonempty")
    }

    /// Writes `t,<coords>,<velocities>` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let header: Vec<&str> = std::iter::once(self.time.as_str())
            .chain(self.coords.iter().map(String::as_str))
            .chain(self.velocities.iter().map(String::as_str))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for s in &self.samples {
            let fields: Vec<String> = std::iter::once(s.t)
                .chain(s.q.iter().copied())
                .chain(s.qd.iter().copied())
                .map(|v| format!("{v:.16e}"))
                .collect();
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    }
}

/// Integrates from `t0` to `t1` with classical RK4. The step is adjusted to
/// `(t1 − t0)/n` for the smallest whole `n` with `|step| ≤ |h|`.
pub fn integrate(
    sys: &LagrangianSystem,
    q0: &[f64],
    qd0: &[f64],
    t0: f64,
    t1: f64,
    h: f64,
) -> Result<Trajectory, DynamicsError> {
    integrate_eom(&EquationsOfMotion::new(sys)?, q0, qd0, t0, t1, h)
}

pub fn integrate_eom(
    eom: &EquationsOfMotion,
    q0: &[f64],
    qd0: &[f64],
    t0: f64,
    t1: f64,
    h: f64,
) -> Result<Trajectory, DynamicsError> {
    let n = eom.dof();
    for got in [q0.len(), qd0.len()] {
        if got != n {
            return Err(DynamicsError::Shape { expected: n, got });
        }
    }
    let span = t1 - t0;
    if !(span.is_finite() && h.is_finite()) || span == 0.0 || h == 0.0 {
        return Err(DynamicsError::Degenerate(format!("interval [{t0}, {t1}] with step {h}")));
    }
    let steps = (span.abs() / h.abs() - 1e-9).ceil().max(1.0) as usize;
    let step = span / steps as f64;

    let deriv = |t: f64, y: &[f64]| -> Result<Vec<f64>, DynamicsError> {
        let acc = eom.accelerations(t, &y[..n], &y[n..])?;
        Ok(y[n..].iter().copied().chain(acc).collect())
    };
    let axpy = |y: &[f64], k: &[f64], a: f64| -> Vec<f64> { y.iter().zip(k).map(|(y, k)| y + a * k).collect() };

    let mut y: Vec<f64> = q0.iter().chain(qd0).copied().collect();
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(Sample {
        t: t0,
        q: q0.to_vec(),
        qd: qd0.to_vec(),
    });
    for k in 0..steps {
        let t = t0 + k as f64 * step;
        let k1 = deriv(t, &y)?;
        let k2 = deriv(t + step / 2.0, &axpy(&y, &k1, step / 2.0))?;
        let k3 = deriv(t + step / 2.0, &axpy(&y, &k2, step / 2.0))?;
        let k4 = deriv(t + step, &axpy(&y, &k3, step))?;
        for i in 0..y.len() {
            y[i] += step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        samples.push(Sample {
            t: if k + 1 == steps { t1 } else { t0 + (k + 1) as f64 * step },
            q: y[..n].to_vec(),
            qd: y[n..].to_vec(),
        });
    }
    Ok(Trajectory {
        time: eom.time.clone(),
        coords: eom.coords.clone(),
        velocities: eom.velocities.clone(),
        params: eom.params.clone(),
        samples,
        h: step,
        integrator: "rk4",
    })
}

#[derive(Debug, Clone)]
pub struct DriftReport {
    pub label: String,
    pub values: Vec<f64>,
    /// `max_k |Q_k − Q_0| / max(|Q_0|, 1e-300)`.
    pub max_relative_drift: f64,
}

pub const DRIFT_FLOOR: f64 = 1e-300;

/// Evaluates `quantity` (in the trajectory's time, coordinates, velocities and
/// parameters) at every sample.
pub fn monitor(traj: &Trajectory, label: &str, quantity: &Expr) -> Result<DriftReport, DynamicsError> {
    let mut slots = vec![traj.time.as_str()];
    slots.extend(traj.coords.iter().map(String::as_str));
    slots.extend(traj.velocities.iter().map(String::as_str));
    let f = CompiledExpr::new(quantity, &slots, &traj.params)?;
    let mut args = Vec::with_capacity(slots.len());
    let values: Vec<f64> = traj
        .samples
        .iter()
        .map(|s| {
            args.clear();
            args.push(s.t);
            args.extend_from_slice(&s.q);
            args.extend_from_slice(&s.qd);
            f.eval(&args)
        })
        .collect::<Result<_, _>>()?;
    let q0 = values[0];
    let max_relative_drift = values
        .iter()
        .map(|v| (v - q0).abs() / q0.abs().max(DRIFT_FLOOR))
        .fold(0.0, f64::max);
    Ok(DriftReport {
        label: label.to_string(),
        values,
        max_relative_drift,
    })
}

/// What [`convergence_order`] measures at each step size.
#[derive(Debug, Clone)]
pub enum ErrorMeasure {
    /// Maximum relative drift of a quantity.
    Drift(Expr),
    /// Richardson estimate `|y_h(t1) − y_{h/2}(t1)|` of the endpoint error.
    Endpoint,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub steps: Vec<f64>,
    pub errors: Vec<f64>,
    /// Least-squares slope of `log error` against `log h`.
    pub order: f64,
}

pub fn convergence_order(
    sys: &LagrangianSystem,
    q0: &[f64],
    qd0: &[f64],
    t0: f64,
    t1: f64,
    measure: &ErrorMeasure,
    steps: &[f64],
) -> Result<ConvergenceReport, DynamicsError> {
    if steps.len() < 2 {
        return Err(DynamicsError::Degenerate("need at least two step sizes".into()));
    }
    let eom = EquationsOfMotion::new(sys)?;
    let endpoint = |h: f64| -> Result<Vec<f64>, DynamicsError> {
        let s = integrate_eom(&eom, q0, qd0, t0, t1, h)?.last().clone();
        Ok(s.q.into_iter().chain(s.qd).collect())
    };
    let errors: Vec<f64> = steps
        .iter()
        .map(|&h| match measure {
            ErrorMeasure::Drift(q) => Ok(monitor(&integrate_eom(&eom, q0, qd0, t0, t1, h)?, "", q)?.max_relative_drift),
            ErrorMeasure::Endpoint => {
                let (a, b) = (endpoint(h)?, endpoint(h / 2.0)?);
                Ok(a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt())
            }
        })
        .collect::<Result<_, DynamicsError>>()?;
    if errors.iter().any(|e| *e <= 0.0 || !e.is_finite()) {
        return Err(DynamicsError::Degenerate(format!("nonpositive error in {errors:?}")));
    }
    let xs: Vec<f64> = steps.iter().map(|h| h.abs().ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    Ok(ConvergenceReport {
        steps: steps.to_vec(),
        order: slope(&xs, &ys),
        errors,
    })
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::parametrize::lift;

    fn bateman(gamma: f64) -> LagrangianSystem {
        let l = parse("m/2*(xd^2 - w0^2*x^2)*exp(2*G*t)").unwrap();
        let params = Binding::new().with("m", 1.0).with("w0", 1.0).with("G", gamma);
        LagrangianSystem::new(&["x"], l, params).unwrap()
    }

    /// Closed-form underdamped solution with x(0)=1, ẋ(0)=0.
    fn damped(t: f64, gamma: f64) -> f64 {
        let w = (1.0 - gamma * gamma).sqrt();
        (-gamma * t).exp() * ((w * t).cos() + gamma / w * (w * t).sin())
    }

    #[test]
    fn bateman_matches_closed_form() {
        let traj = integrate(&bateman(0.1), &[1.0], &[0.0], 0.0, 5.0, 1e-3).unwrap();
        assert_eq!(traj.samples.len(), 5001);
        let err = traj.samples.iter().map(|s| (s.q[0] - damped(s.t, 0.1)).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn free_particle_is_exact() {
        let sys = LagrangianSystem::new(&["q"], parse("m/2*qd^2").unwrap(), Binding::new().with("m", 3.0)).unwrap();
        let traj = integrate(&sys, &[0.0], &[1.0], 0.0, 2.0, 0.1).unwrap();
        for s in &traj.samples {
            assert!((s.q[0] - s.t).abs() < 1e-14);
        }
        let one = monitor(&traj, "one", &Expr::one()).unwrap();
        assert_eq!(one.max_relative_drift, 0.0);
    }

    #[test]
    fn coupled_two_dof() {
        // Two oscillators coupled through the kinetic term.
        let l = parse("(xd^2 + yd^2)/2 + xd*yd/4 - (x^2 + y^2)/2").unwrap();
        let sys = LagrangianSystem::new(&["x", "y"], l, Binding::new()).unwrap();
        let traj = integrate(&sys, &[1.0, 0.0], &[0.0, 0.5], 0.0, 10.0, 1e-2).unwrap();
        let e = parse("(xd^2 + yd^2)/2 + xd*yd/4 + (x^2 + y^2)/2").unwrap();
        assert!(monitor(&traj, "E", &e).unwrap().max_relative_drift < 1e-8);
    }

    #[test]
    fn time_reversal() {
        let sys = bateman(0.1);
        let fwd = integrate(&sys, &[1.0], &[0.0], 0.0, 3.0, 1e-3).unwrap();
        let end = fwd.last();
        let back = integrate(&sys, &end.q, &end.qd, 3.0, 0.0, 1e-3).unwrap();
        let b = back.last();
        assert!((b.q[0] - 1.0).abs() < 1e-11 && b.qd[0].abs() < 1e-11, "{b:?}");
    }

    #[test]
    fn rk4_order() {
        let sys = bateman(0.1);
        let r = convergence_order(&sys, &[1.0], &[0.0], 0.0, 2.0, &ErrorMeasure::Endpoint, &[0.08, 0.04, 0.02]).unwrap();
        assert!((r.order - 4.0).abs() < 0.3, "{r:?}");
        let q = parse("m/2*((xd + G*x)^2 + (w0^2 - G^2)*x^2)*exp(2*G*t)").unwrap();
        let r = convergence_order(&sys, &[1.0], &[0.0], 0.0, 5.0, &ErrorMeasure::Drift(q), &[0.1, 0.05, 0.025]).unwrap();
        assert!((r.order - 4.0).abs() < 0.3, "{r:?}");
        assert!(convergence_order(&sys, &[1.0], &[0.0], 1.0, 1.0, &ErrorMeasure::Endpoint, &[0.1, 0.05]).is_err());
    }

    #[test]
    fn gauge_choice_does_not_change_the_curve() {
        let sys = bateman(0.1);
        let ps = lift(&sys).unwrap();
        let plain = integrate(&sys, &[1.0], &[0.0], 0.0, 4.0, 1e-2).unwrap();
        for rate in [1.0, 2.0] {
            let eom = EquationsOfMotion::parametrized(&ps, 0.0, rate).unwrap();
            let traj = integrate_eom(&eom, &[1.0], &[rate * 0.0], 0.0, 4.0 / rate, 1e-2 / rate).unwrap();
            assert_eq!(traj.samples.len(), plain.samples.len());
            for (a, b) in traj.samples.iter().zip(&plain.samples) {
                assert!((eom.physical_time(a.t) - b.t).abs() < 1e-12);
                assert!((a.q[0] - b.q[0]).abs() < 1e-12, "rate {rate}");
            }
        }
    }

    #[test]
    fn csv_layout() {
        let traj = integrate(&bateman(0.1), &[1.0], &[0.0], 0.0, 0.002, 1e-3).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x,xd");
        assert_eq!(lines[1], "0.0000000000000000e0,1.0000000000000000e0,0.0000000000000000e0");
        assert_eq!(lines.len(), 4);
    }
}
