pub mod classical;
pub mod derive;
pub mod noether;
pub mod quantum;
pub mod reproduce;

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use noetherq_core::classical::{legendre, HamiltonianSystem};
use noetherq_core::noether::{charge, solve_determining, verify_conserved, AnsatzBasis, ConservedQuantity, SamplerConfig};
use noetherq_core::parametrize::ParametrizedSystem;
use noetherq_core::Expr;
use serde_json::{json, Map, Value};

use crate::model::ModelFile;
use crate::report::Report;
use crate::{CliError, Common};

/// Loads `--model` and applies `--set` and `--gamma`.
pub fn load_model(common: &Common) -> Result<ModelFile, CliError> {
    let mut model = ModelFile::load(&common.model)?;
    apply_overrides(&mut model, common)?;
    Ok(model)
}

pub fn apply_overrides(model: &mut ModelFile, common: &Common) -> Result<(), CliError> {
    for assignment in &common.set {
        let (name, value) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects NAME=VALUE, got `{assignment}`")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("--set {name}: `{value}` is not a number")))?;
        model.set_param(name.trim(), value)?;
    }
    if let Some(gamma) = common.gamma {
        let name = model
            .gamma_param()
            .map(str::to_string)
            .ok_or_else(|| CliError::Usage(format!("model `{}` names no damping parameter", model.name)))?;
        model.set_param(&name, gamma)?;
    }
    Ok(())
}

pub fn echo_model(report: &mut Report, model: &ModelFile) {
    report.input("model", model.name.clone());
    report.input("lagrangian", model.lagrangian.to_string());
    report.input("coordinates", model.coordinates.clone());
    let params: Map<String, Value> = model.params.iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
    report.input("params", params);
}

pub fn sampler_config(common: &Common) -> SamplerConfig {
    let mut cfg = SamplerConfig {
        seed: common.seed,
        ..SamplerConfig::default()
    };
    if let Some(solver) = &common.nullspace {
        cfg.solver = solver.clone();
    }
    cfg
}

/// Discovered generators with their charges.
pub struct Discovery {
    pub hsys: HamiltonianSystem,
    pub charges: Vec<ConservedQuantity>,
}

/// Solves the determining system over `basis` and records the outcome.
pub fn discover(
    report: &mut Report,
    ps: &ParametrizedSystem,
    basis: &AnsatzBasis,
    common: &Common,
) -> Result<Discovery, CliError> {
    let sol = solve_determining(ps, basis, &sampler_config(common))?;
    for w in &sol.warnings {
        report.warn(w.clone());
    }
    if !sol.rejected.is_empty() {
        report.warn(format!(
            "{} null vector(s) failed the exact symmetry test and were dropped",
            sol.rejected.len()
        ));
    }
    report.result(
        "null_space",
        json!({
            "rows": sol.rows,
            "unknowns": basis.unknowns(),
            "rank": sol.null_space.rank,
            "dimension": sol.null_space.basis.len(),
            "gap": crate::report::finite_or_null(sol.null_space.gap),
        }),
    );
    let hsys = legendre(ps.origin())?;
    let charges = sol
        .generators
        .iter()
        .map(|g| charge(ps, g))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Discovery { hsys, charges })
}

pub fn write_file(path: &Path, write: impl FnOnce(BufWriter<File>) -> std::io::Result<()>) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io)?;
    write(BufWriter::new(file)).map_err(io)
}

/// `dQ/dt` with symbolic parameters, or with parameters bound exactly when
/// the generator is a symmetry only at the model's values. The flag says
/// whether binding was needed.
pub fn conservation_rate(ps: &ParametrizedSystem, cq: &ConservedQuantity) -> Result<(Expr, bool), CliError> {
    let rate = verify_conserved(cq, &legendre(ps.origin())?);
    if rate.is_const_zero() {
        return Ok((rate, false));
    }
    let bound = ps.bind_exact();
    let cq = charge(&bound, &cq.generator.bind_exact(ps.origin().params()))?;
    Ok((verify_conserved(&cq, &legendre(bound.origin())?), true))
}

pub fn record_conservation(report: &mut Report, name: &str, ps: &ParametrizedSystem, cq: &ConservedQuantity) -> Result<bool, CliError> {
    let (rate, bound) = conservation_rate(ps, cq)?;
    let detail = if bound {
        format!("dQ/dt for generator {} with parameters bound", cq.generator)
    } else {
        format!("dQ/dt for generator {}", cq.generator)
    };
    Ok(report.check(name, rate.is_const_zero(), rate.to_string(), "0", &detail))
}
