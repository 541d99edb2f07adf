use noetherq_core::classical::{energy, energy_rate, LagrangianSystem};
use noetherq_core::dynamics::{integrate, monitor, Trajectory};
use noetherq_core::noether::ConservedQuantity;
use noetherq_core::parametrize::lift;
use serde_json::json;

use super::{discover, echo_model, load_model, write_file};
use crate::report::{finite_or_null, Report};
use crate::{CliError, Common};

pub const DEFAULT_T1: f64 = 20.0;
pub const DEFAULT_H: f64 = 1e-3;
pub const DEFAULT_TOL: f64 = 1e-7;

/// Integrates the model from its initial state and writes `trajectory.csv`.
pub fn trajectory(report: &mut Report, model: &crate::model::ModelFile, sys: &LagrangianSystem, common: &Common) -> Result<Trajectory, CliError> {
    let (t0, t1, h) = (common.t0.unwrap_or(0.0), common.t1.unwrap_or(DEFAULT_T1), common.h.unwrap_or(DEFAULT_H));
    let (q0, qd0) = model.initial_state();
    report.input("t0", t0);
    report.input("t1", t1);
    report.input("h", h);
    report.input("q0", q0.clone());
    report.input("qd0", qd0.clone());
    let traj = integrate(sys, &q0, &qd0, t0, t1, h)?;
    write_file(&common.out.join("trajectory.csv"), |w| traj.write_csv(w))?;
    report.result("steps", traj.samples.len() - 1);
    let last = traj.last();
    report.result("final_state", json!({"t": last.t, "q": last.q, "qd": last.qd}));
    Ok(traj)
}

/// Drift checks for each charge, plus energy when it is conserved.
pub fn drift_checks(
    report: &mut Report,
    sys: &LagrangianSystem,
    traj: &Trajectory,
    charges: &[ConservedQuantity],
    tol: f64,
) -> Result<(), CliError> {
    let mut drifts = serde_json::Map::new();
    for (i, cq) in charges.iter().enumerate() {
        let d = monitor(traj, &cq.label, &cq.velocity)?;
        drifts.insert(cq.label.clone(), finite_or_null(d.max_relative_drift));
        report.check_le(
            &format!("charge_drift[{i}]"),
            d.max_relative_drift,
            tol,
            &format!("max relative drift of {}", cq.velocity),
        );
    }
    let e = energy(sys);
    let de = monitor(traj, "E", &e)?;
    let change = (de.values[de.values.len() - 1] - de.values[0]).abs() / de.values[0].abs().max(1e-300);
    drifts.insert("E".into(), finite_or_null(de.max_relative_drift));
    report.result("drift", drifts);
    report.result("energy_relative_change", finite_or_null(change));
    if energy_rate(sys).conserved {
        report.check_le("energy_drift", de.max_relative_drift, tol, "energy is conserved for this model");
    } else if charges.is_empty() {
        report.warn("no conserved charge found and the energy is not conserved; nothing to check");
    }
    Ok(())
}

pub fn run(common: &Common) -> Result<Report, CliError> {
    let model = load_model(common)?;
    let sys = model.system()?;
    let ps = lift(&sys)?;
    let mut report = Report::new("verify-classical", common.seed);
    echo_model(&mut report, &model);
    let tol = common.tol.unwrap_or(DEFAULT_TOL);
    report.input("tol", tol);

    let found = discover(&mut report, &ps, &model.ansatz_basis(&ps)?, common)?;
    report.result(
        "charges",
        found.charges.iter().map(|c| c.velocity.to_string()).collect::<Vec<_>>(),
    );
    let traj = trajectory(&mut report, &model, &sys, common)?;
    drift_checks(&mut report, &sys, &traj, &found.charges, tol)?;
    Ok(report)
}
