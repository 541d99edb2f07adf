use noetherq_core::classical::HamiltonianSystem;
use noetherq_core::noether::ConservedQuantity;
use noetherq_core::parametrize::lift;
use noetherq_core::quantum::{
    analytic_dho_state, eigencheck, propagate_cn, tdse_residual, DhoParams, Grid1D, OperatorFamily, Quantizer,
    Wavefunction,
};
use serde_json::json;

use super::{discover, echo_model, load_model, write_file};
use crate::model::ModelFile;
use crate::report::{finite_or_null, Report};
use crate::{CliError, Common, QuantumArgs};

pub const EIGENVALUE_TOL: f64 = 1e-5;
pub const RESIDUAL_TOL: f64 = 1e-4;
pub const TDSE_TOL: f64 = 1e-4;
pub const TDSE_DT: f64 = 1e-5;
pub const NORM_DEFICIT_WARN: f64 = 1e-6;

/// Grid operators for the model's Hamiltonian and its time-translation charge.
pub struct QuantumSetup {
    pub dho: DhoParams,
    pub quantizer: Quantizer,
    pub h: OperatorFamily,
    pub q: OperatorFamily,
    /// `−ξ⁰` of the charge's generator: the analytic eigenvalues scale by it.
    pub scale: f64,
    pub box_half: f64,
}

impl QuantumSetup {
    pub fn new(
        report: &mut Report,
        model: &ModelFile,
        common: &Common,
        hsys: &HamiltonianSystem,
        charges: &[ConservedQuantity],
    ) -> Result<Self, CliError> {
        let dho = model.dho_params()?;
        let spec = model.quantum.as_ref().expect("dho_params checked the section");
        let n = common.grid_n.unwrap_or(spec.n);
        let box_half = common.box_half.unwrap_or(spec.box_half);
        let grid = Grid1D::symmetric(box_half * dho.length()?, n)?;
        let quantizer = Quantizer::new(grid, common.stencil.as_deref(), dho.hbar)?;
        report.input("grid_n", n);
        report.input("box", box_half);
        report.input("x_max", grid.x_max());
        report.input("hbar", dho.hbar);
        report.input("stencil", quantizer.stencil.name());

        let (cq, xi0) = charges
            .iter()
            .find_map(|cq| {
                let xi0 = cq.generator.xi0.bind_exact(&model.params).simplify().as_const()?.to_f64();
                (xi0 != 0.0).then_some((cq, xi0))
            })
            .ok_or_else(|| CliError::Usage("no charge with constant nonzero ξ⁰ was found to quantize".into()))?;
        report.derive("quantized_charge", cq.phase.to_string());
        Ok(QuantumSetup {
            h: OperatorFamily::hamiltonian(hsys, &quantizer)?,
            q: OperatorFamily::new(&cq.phase, hsys, &quantizer)?,
            scale: -xi0,
            dho,
            quantizer,
            box_half,
        })
    }

    pub fn grid(&self) -> Grid1D {
        self.quantizer.grid
    }

    pub fn state(&self, n: u32, t: f64) -> Result<Wavefunction, CliError> {
        Ok(analytic_dho_state(n, &self.dho, &self.quantizer.grid, t)?)
    }

    pub fn expected(&self, n: u32) -> Result<f64, CliError> {
        Ok(self.scale * self.dho.eigenvalue(n)?)
    }

    pub fn tdse(&self, n: u32, t: f64) -> Result<f64, CliError> {
        let grid = self.quantizer.grid;
        let dho = self.dho;
        Ok(tdse_residual(&|s| analytic_dho_state(n, &dho, &grid, s), &self.h, t, TDSE_DT)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenRow {
    pub n: u32,
    pub t: f64,
    pub q_estimate: f64,
    pub q_expected: f64,
    pub residual: f64,
    pub imag_ratio: f64,
    pub tdse_residual: f64,
    pub norm_deficit: f64,
}

/// Eigen and Schrödinger checks of `ψ_n(·, t)` for every pair.
pub fn eigen_table(
    setup: &QuantumSetup,
    ns: &[u32],
    ts: &[f64],
    mut each: impl FnMut(&Wavefunction, u32) -> Result<(), CliError>,
) -> Result<Vec<EigenRow>, CliError> {
    let mut rows = Vec::new();
    for &n in ns {
        for &t in ts {
            let psi = setup.state(n, t)?;
            each(&psi, n)?;
            let ec = eigencheck(&setup.q, &psi)?;
            rows.push(EigenRow {
                n,
                t,
                q_estimate: ec.q_estimate,
                q_expected: setup.expected(n)?,
                residual: ec.residual,
                imag_ratio: ec.imag_ratio,
                tdse_residual: setup.tdse(n, t)?,
                norm_deficit: (psi.norm_sqr() - 1.0).abs(),
            });
        }
    }
    Ok(rows)
}

pub fn rows_json(rows: &[EigenRow], setup: &QuantumSetup) -> serde_json::Value {
    rows.iter()
        .map(|r| {
            json!({
                "n": r.n,
                "t": r.t,
                "q_estimate": finite_or_null(r.q_estimate),
                "q_expected": r.q_expected,
                "residual": finite_or_null(r.residual),
                "imag_ratio": finite_or_null(r.imag_ratio),
                "tdse_residual": finite_or_null(r.tdse_residual),
                "norm_deficit": finite_or_null(r.norm_deficit),
                "grid_n": setup.grid().len(),
                "box": setup.box_half,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnOutcome {
    pub steps: usize,
    pub l2_error: f64,
    /// `max_k |‖ψ_k‖² − ‖ψ_0‖²| / ‖ψ_0‖²`.
    pub norm_drift: f64,
    /// Relative spread of the charge's Rayleigh quotient along the run.
    pub rayleigh_drift: f64,
}

/// Propagates `ψ_n(·, t0)` to `t1` and compares with `ψ_n(·, t1)`.
pub fn cn_check(setup: &QuantumSetup, n: u32, t0: f64, t1: f64, dt: f64) -> Result<CnOutcome, CliError> {
    let psi0 = setup.state(n, t0)?;
    let n0 = psi0.norm_sqr();
    let total = ((t1 - t0).abs() / dt - 1e-9).ceil().max(1.0) as usize;
    let stride = (total / 10).max(1);
    let mut norm_drift: f64 = 0.0;
    let mut snapshots = vec![psi0.clone()];
    let end = propagate_cn(&psi0, &setup.h, t1, dt, |s| {
        norm_drift = norm_drift.max((s.psi.norm_sqr() - n0).abs() / n0);
        if s.step % stride == 0 {
            snapshots.push(s.psi.clone());
        }
    })?;
    let exact = setup.state(n, t1)?;
    let diff = Wavefunction::new(
        exact.grid,
        t1,
        end.values.iter().zip(&exact.values).map(|(a, b)| a - b).collect(),
    );
    let quotients = snapshots
        .iter()
        .map(|psi| Ok(eigencheck(&setup.q, psi)?.q_estimate))
        .collect::<Result<Vec<f64>, CliError>>()?;
    let rayleigh_drift = quotients
        .iter()
        .map(|q| (q - quotients[0]).abs() / quotients[0].abs().max(1e-300))
        .fold(0.0, f64::max);
    Ok(CnOutcome {
        steps: total,
        l2_error: diff.norm_sqr().sqrt(),
        norm_drift,
        rayleigh_drift,
    })
}

/// Records the propagation checks. Norm drift is allowed `1e-10` per 1000 steps.
pub fn record_cn(report: &mut Report, cn: &CnOutcome) {
    report.result(
        "crank_nicolson",
        json!({
            "steps": cn.steps,
            "l2_error": finite_or_null(cn.l2_error),
            "norm_drift": finite_or_null(cn.norm_drift),
            "rayleigh_drift": finite_or_null(cn.rayleigh_drift),
        }),
    );
    report.check_le("cn_l2_error", cn.l2_error, 1e-3, "propagated vs analytic state");
    report.check_le("cn_norm_drift", cn.norm_drift, 1e-10 * (cn.steps as f64 / 1000.0).max(1.0), "");
    report.check_le("cn_rayleigh_drift", cn.rayleigh_drift, 1e-6, "charge expectation along the run");
}

pub fn run(common: &Common, args: &QuantumArgs) -> Result<Report, CliError> {
    let model = load_model(common)?;
    model.dho_params()?.omega()?;
    let sys = model.system()?;
    let ps = lift(&sys)?;
    let mut report = Report::new("verify-quantum", common.seed);
    echo_model(&mut report, &model);
    let tol = common.tol.unwrap_or(EIGENVALUE_TOL);
    report.input("n", args.n.clone());
    report.input("t", args.t.clone());
    report.input("tol", tol);

    let found = discover(&mut report, &ps, &model.ansatz_basis(&ps)?, common)?;
    let setup = QuantumSetup::new(&mut report, &model, common, &found.hsys, &found.charges)?;
    let rows = eigen_table(&setup, &args.n, &args.t, |psi, n| {
        let path = common.out.join(format!("psi_{n}_{}.csv", psi.t));
        write_file(&path, |w| psi.write_csv(w))
    })?;
    report.result("eigenchecks", rows_json(&rows, &setup));

    let mut all = true;
    for r in &rows {
        let tag = format!("n={},t={}", r.n, r.t);
        all &= report.check_le(
            &format!("eigenvalue[{tag}]"),
            (r.q_estimate - r.q_expected).abs(),
            tol,
            &format!("Rayleigh quotient {:.12} vs {:.12}", r.q_estimate, r.q_expected),
        );
        all &= report.check_le(&format!("eigen_residual[{tag}]"), r.residual, RESIDUAL_TOL, "");
        all &= report.check_le(&format!("tdse_residual[{tag}]"), r.tdse_residual, TDSE_TOL, "");
        if r.norm_deficit > NORM_DEFICIT_WARN {
            report.warn(format!("ψ_{} at t = {} has norm deficit {:.3e}", r.n, r.t, r.norm_deficit));
        }
    }
    if !all {
        report.warn(format!(
            "residuals exceed tolerance on the {}-point grid; the grid is not converged (raise --grid-n or --box)",
            setup.grid().len()
        ));
    }

    if args.cn {
        let t0 = args.t.iter().copied().fold(f64::INFINITY, f64::min);
        let t1 = args.t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let t1 = if t1 > t0 { t1 } else { t0 + 1.0 };
        report.input("cn_dt", args.cn_dt);
        let cn = cn_check(&setup, 0, t0, t1, args.cn_dt)?;
        record_cn(&mut report, &cn);
    }
    Ok(report)
}
