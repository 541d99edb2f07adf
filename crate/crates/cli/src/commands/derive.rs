use noetherq_core::classical::{energy, energy_rate, euler_lagrange, legendre, momenta, momentum_name};
use noetherq_core::parametrize::{lift, primary_constraint};
use noetherq_core::Expr;
use serde_json::{Map, Value};

use super::{echo_model, load_model};
use crate::report::Report;
use crate::{CliError, Common};

pub fn run(common: &Common) -> Result<Report, CliError> {
    let model = load_model(common)?;
    let sys = model.system()?;
    let mut report = Report::new("derive", common.seed);
    echo_model(&mut report, &model);

    let named = |names: Vec<String>, exprs: &[Expr]| -> Map<String, Value> {
        names
            .into_iter()
            .zip(exprs)
            .map(|(n, e)| (n, Value::String(e.to_string())))
            .collect()
    };
    let el = euler_lagrange(&sys);
    report.derive("euler_lagrange", named(sys.coords().to_vec(), &el));
    report.derive("energy", energy(&sys).to_string());
    let p = momenta(&sys);
    report.derive("momenta", named(sys.coords().iter().map(|c| momentum_name(c)).collect(), &p));
    let rate = energy_rate(&sys);
    report.derive("energy_rate", rate.rate.to_string());
    report.result("energy_conserved", rate.conserved);
    report.result("regular", sys.is_regular());

    match legendre(&sys) {
        Ok(h) => {
            report.derive("hamiltonian", h.hamiltonian().to_string());
            report.derive(
                "velocities",
                named(sys.velocities().to_vec(), h.velocity_of_momenta()),
            );
            let ps = lift(&sys)?;
            report.derive("lifted_lagrangian", ps.lbar().to_string());
            let defect = ps.homogeneity_defect();
            report.check(
                "lift_homogeneity",
                defect.is_zero(),
                defect.to_string(),
                "0",
                "Euler defect of the lifted Lagrangian in the velocities",
            );
            let c = primary_constraint(&ps)?;
            report.derive("constraint", c.phi.to_string());
        }
        Err(e) => report.warn(format!("no Hamiltonian: {e}")),
    }
    Ok(report)
}
