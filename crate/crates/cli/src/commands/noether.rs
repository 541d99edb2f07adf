use noetherq_core::noether::AnsatzBasis;
use noetherq_core::parametrize::lift;
use noetherq_core::{parse, Expr};
use serde_json::{json, Value};

use super::{discover, echo_model, load_model, record_conservation};
use crate::model::ModelFile;
use crate::report::Report;
use crate::{CliError, Common, NoetherArgs};

fn terms(flag: &str, text: &str) -> Result<Vec<Expr>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(s).map_err(|e| CliError::Usage(format!("{flag} `{s}`: {e}"))))
        .collect()
}

/// The model's ansatz with `--xi0`/`--xi` overrides applied.
pub fn basis_from_flags(
    model: &ModelFile,
    ps: &noetherq_core::parametrize::ParametrizedSystem,
    args: &NoetherArgs,
) -> Result<AnsatzBasis, CliError> {
    let mut basis = model.ansatz_basis(ps)?;
    if let Some(xi0) = &args.xi0 {
        basis.basis0 = terms("--xi0", xi0)?;
    }
    for spec in &args.xi {
        let (coord, list) = match spec.split_once('=') {
            Some((c, l)) => (c.trim().to_string(), l),
            None if model.coordinates.len() == 1 => (model.coordinates[0].clone(), spec.as_str()),
            None => return Err(CliError::Usage(format!("--xi `{spec}` must name a coordinate: COORD=terms"))),
        };
        let i = model
            .coordinates
            .iter()
            .position(|c| *c == coord)
            .ok_or_else(|| CliError::Usage(format!("--xi: unknown coordinate `{coord}`")))?;
        basis.basis[i] = terms("--xi", list)?;
    }
    Ok(basis)
}

fn listing(terms: &[Expr]) -> Value {
    Value::Array(terms.iter().map(|t| Value::String(t.to_string())).collect())
}

pub fn run(common: &Common, args: &NoetherArgs) -> Result<Report, CliError> {
    let model = load_model(common)?;
    let sys = model.system()?;
    let ps = lift(&sys)?;
    let basis = basis_from_flags(&model, &ps, args)?;
    let mut report = Report::new("noether", common.seed);
    echo_model(&mut report, &model);
    report.input(
        "ansatz",
        json!({
            "xi0": listing(&basis.basis0),
            "xi": model.coordinates.iter().zip(&basis.basis)
                .map(|(c, b)| (c.clone(), listing(b)))
                .collect::<serde_json::Map<_, _>>(),
        }),
    );
    report.input("nullspace", common.nullspace.clone().unwrap_or_else(|| "svd".into()));

    let found = discover(&mut report, &ps, &basis, common)?;
    if found.charges.is_empty() {
        report.result("status", "none found");
    } else {
        report.result("status", format!("{} generator(s) found", found.charges.len()));
    }
    let mut entries = Vec::new();
    for (i, cq) in found.charges.iter().enumerate() {
        record_conservation(&mut report, &format!("conserved[{i}]"), &ps, cq)?;
        entries.push(json!({
            "generator": cq.generator.to_string(),
            "charge": cq.phase.to_string(),
            "charge_velocity_form": cq.velocity.to_string(),
            "certified": cq.certified,
        }));
    }
    report.result("generators", entries);
    Ok(report)
}
