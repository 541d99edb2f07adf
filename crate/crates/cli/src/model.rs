//! Model files: `[section]` headers followed by `key = value` lines, `#`
//! comments. Sections: `model`, `params`, `ansatz`, `initial`, `quantum`.

use std::collections::BTreeMap;
use std::path::Path;

use noetherq_core::classical::{ClassicalError, LagrangianSystem};
use noetherq_core::expr::ParseError;
use noetherq_core::noether::AnsatzBasis;
use noetherq_core::parametrize::ParametrizedSystem;
use noetherq_core::quantum::DhoParams;
use noetherq_core::{parse, Binding, Expr};
use thiserror::Error;

pub const BUILTINS: &[(&str, &str)] = &[
    ("bateman", include_str!("../models/bateman.model")),
    ("free_particle", include_str!("../models/free_particle.model")),
    ("harmonic", include_str!("../models/harmonic.model")),
];

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing `{key}` in [{section}]")]
    Missing { section: &'static str, key: &'static str },
    #[error("`{key}`: {source}")]
    Expr { key: String, source: ParseError },
    #[error("`{0}` is neither a readable file nor a built-in model ({names})", names = builtin_names())]
    NotFound(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Classical(#[from] ClassicalError),
}

fn builtin_names() -> String {
    BUILTINS.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")
}

/// A number or the name of a parameter.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamRef {
    Name(String),
    Value(f64),
}

impl ParamRef {
    fn parse(text: &str) -> Self {
        text.parse().map_or_else(|_| ParamRef::Name(text.to_string()), ParamRef::Value)
    }

    pub fn resolve(&self, params: &Binding) -> Result<f64, ModelError> {
        match self {
            ParamRef::Value(v) => Ok(*v),
            ParamRef::Name(n) => params
                .get(n)
                .ok_or_else(|| ModelError::Invalid(format!("[quantum] refers to unknown parameter `{n}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnsatzSpec {
    pub xi0: Vec<Expr>,
    pub xi: BTreeMap<String, Vec<Expr>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumSpec {
    pub hbar: f64,
    pub mass: ParamRef,
    pub omega0: ParamRef,
    pub gamma: ParamRef,
    /// Half-width in units of `√(ħ/(mω))`.
    pub box_half: f64,
    pub n: usize,
}

#[derive(Debug, Clone)]
pub struct ModelFile {
    pub name: String,
    pub coordinates: Vec<String>,
    pub time: String,
    pub lagrangian: Expr,
    pub params: Binding,
    pub ansatz: Option<AnsatzSpec>,
    pub initial: BTreeMap<String, f64>,
    pub quantum: Option<QuantumSpec>,
}

type Sections = BTreeMap<String, Vec<(usize, String, String)>>;

fn split_sections(text: &str) -> Result<Sections, ModelError> {
    let mut sections: Sections = BTreeMap::new();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim().to_string();
            if !["model", "params", "ansatz", "initial", "quantum"].contains(&name.as_str()) {
                return Err(ModelError::Syntax {
                    line: line_no,
                    message: format!("unknown section [{name}]"),
                });
            }
            if sections.contains_key(&name) {
                return Err(ModelError::Syntax {
                    line: line_no,
                    message: format!("section [{name}] repeated"),
                });
            }
            sections.insert(name.clone(), Vec::new());
            current = Some(name);
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ModelError::Syntax {
                line: line_no,
                message: "expected `key = value`".into(),
            });
        };
        let Some(section) = &current else {
            return Err(ModelError::Syntax {
                line: line_no,
                message: "entry before any [section]".into(),
            });
        };
        let entries = sections.get_mut(section).expect("inserted above");
        let key = key.trim().to_string();
        if entries.iter().any(|(_, k, _)| *k == key) {
            return Err(ModelError::Syntax {
                line: line_no,
                message: format!("duplicate key `{key}`"),
            });
        }
        entries.push((line_no, key, value.trim().to_string()));
    }
    Ok(sections)
}

fn expr_list(key: &str, text: &str) -> Result<Vec<Expr>, ModelError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            parse(s).map_err(|source| ModelError::Expr {
                key: key.to_string(),
                source,
            })
        })
        .collect()
}

fn number(line: usize, key: &str, text: &str) -> Result<f64, ModelError> {
    text.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| ModelError::Syntax {
            line,
            message: format!("`{key}` needs a finite number, got `{text}`"),
        })
}

impl ModelFile {
    pub fn parse(text: &str, default_name: &str) -> Result<Self, ModelError> {
        let sections = split_sections(text)?;
        let get = |section: &'static str, key: &'static str| -> Option<&(usize, String, String)> {
            sections.get(section)?.iter().find(|(_, k, _)| k == key)
        };
        let model = sections.get("model").ok_or(ModelError::Missing {
            section: "model",
            key: "lagrangian",
        })?;
        for (line, key, _) in model {
            if !["name", "coordinates", "time", "lagrangian"].contains(&key.as_str()) {
                return Err(ModelError::Syntax {
                    line: *line,
                    message: format!("unknown key `{key}` in [model]"),
                });
            }
        }
        let name = get("model", "name").map_or(default_name.to_string(), |(_, _, v)| v.clone());
        let coordinates: Vec<String> = get("model", "coordinates")
            .ok_or(ModelError::Missing {
                section: "model",
                key: "coordinates",
            })?
            .2
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        let time = get("model", "time").map_or("t".to_string(), |(_, _, v)| v.clone());
        let lagrangian_text = &get("model", "lagrangian")
            .ok_or(ModelError::Missing {
                section: "model",
                key: "lagrangian",
            })?
            .2;
        let lagrangian = parse(lagrangian_text).map_err(|source| ModelError::Expr {
            key: "lagrangian".into(),
            source,
        })?;

        let mut params = Binding::new();
        for (line, key, value) in sections.get("params").into_iter().flatten() {
            params.set(key, number(*line, key, value)?);
        }

        let ansatz = match sections.get("ansatz") {
            None => None,
            Some(entries) => {
                let mut spec = AnsatzSpec {
                    xi0: Vec::new(),
                    xi: BTreeMap::new(),
                };
                for (line, key, value) in entries {
                    if key == "xi0" {
                        spec.xi0 = expr_list(key, value)?;
                    } else if let Some(coord) = key.strip_prefix("xi.") {
                        spec.xi.insert(coord.to_string(), expr_list(key, value)?);
                    } else if key == "xi" && coordinates.len() == 1 {
                        spec.xi.insert(coordinates[0].clone(), expr_list(key, value)?);
                    } else {
                        return Err(ModelError::Syntax {
                            line: *line,
                            message: format!("unknown ansatz key `{key}` (use xi0 or xi.<coordinate>)"),
                        });
                    }
                }
                Some(spec)
            }
        };

        let mut initial = BTreeMap::new();
        for (line, key, value) in sections.get("initial").into_iter().flatten() {
            initial.insert(key.clone(), number(*line, key, value)?);
        }

        let quantum = match sections.get("quantum") {
            None => None,
            Some(entries) => {
                let find = |key: &str| entries.iter().find(|(_, k, _)| k == key);
                for (line, key, _) in entries {
                    if !["hbar", "mass", "omega0", "gamma", "box", "n"].contains(&key.as_str()) {
                        return Err(ModelError::Syntax {
                            line: *line,
                            message: format!("unknown key `{key}` in [quantum]"),
                        });
                    }
                }
                let num = |key: &str, default: f64| -> Result<f64, ModelError> {
                    find(key).map_or(Ok(default), |(line, k, v)| number(*line, k, v))
                };
                let param = |key: &'static str| -> Result<ParamRef, ModelError> {
                    find(key)
                        .map(|(_, _, v)| ParamRef::parse(v))
                        .ok_or(ModelError::Missing { section: "quantum", key })
                };
                let n = num("n", 2048.0)?;
                if n.fract() != 0.0 || n < 0.0 {
                    return Err(ModelError::Invalid(format!("[quantum] n = {n} is not a count")));
                }
                Some(QuantumSpec {
                    hbar: num("hbar", 1.0)?,
                    mass: param("mass")?,
                    omega0: param("omega0")?,
                    gamma: param("gamma")?,
                    box_half: num("box", 12.0)?,
                    n: n as usize,
                })
            }
        };

        let model = ModelFile {
            name,
            coordinates,
            time,
            lagrangian,
            params,
            ansatz,
            initial,
            quantum,
        };
        model.system()?;
        Ok(model)
    }

    /// Reads `spec` as a file path, falling back to a built-in model name.
    pub fn load(spec: &str) -> Result<Self, ModelError> {
        let path = Path::new(spec);
        if path.is_file() {
            let text = std::fs::read_to_string(path).map_err(|e| ModelError::Invalid(format!("{spec}: {e}")))?;
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
            return Self::parse(&text, stem);
        }
        match BUILTINS.iter().find(|(n, _)| *n == spec) {
            Some((name, text)) => Self::parse(text, name),
            None => Err(ModelError::NotFound(spec.to_string())),
        }
    }

    pub fn system(&self) -> Result<LagrangianSystem, ModelError> {
        let coords: Vec<&str> = self.coordinates.iter().map(String::as_str).collect();
        let velocities: Vec<String> = coords.iter().map(|c| noetherq_core::classical::velocity_name(c)).collect();
        let vel_refs: Vec<&str> = velocities.iter().map(String::as_str).collect();
        Ok(LagrangianSystem::with_names(
            &coords,
            &vel_refs,
            &self.time,
            self.lagrangian.clone(),
            self.params.clone(),
        )?)
    }

    pub fn set_param(&mut self, name: &str, value: f64) -> Result<(), ModelError> {
        if !self.params.contains(name) {
            return Err(ModelError::Invalid(format!("model has no parameter `{name}`")));
        }
        self.params.set(name, value);
        Ok(())
    }

    /// Name of the parameter that the `[quantum]` section maps to `Γ`.
    pub fn gamma_param(&self) -> Option<&str> {
        match &self.quantum.as_ref()?.gamma {
            ParamRef::Name(n) => Some(n),
            ParamRef::Value(_) => None,
        }
    }

    /// The model's ansatz, or the default basis for missing components.
    pub fn ansatz_basis(&self, ps: &ParametrizedSystem) -> Result<AnsatzBasis, ModelError> {
        let mut basis = AnsatzBasis::default_for(ps);
        if let Some(spec) = &self.ansatz {
            basis.basis0 = spec.xi0.clone();
            for (coord, terms) in &spec.xi {
                let i = self
                    .coordinates
                    .iter()
                    .position(|c| c == coord)
                    .ok_or_else(|| ModelError::Invalid(format!("ansatz for unknown coordinate `{coord}`")))?;
                basis.basis[i] = terms.clone();
            }
            for (i, c) in self.coordinates.iter().enumerate() {
                if !spec.xi.contains_key(c) {
                    basis.basis[i].clear();
                }
            }
        }
        Ok(basis)
    }

    /// `(q, q̇)` from `[initial]`, zero where absent.
    pub fn initial_state(&self) -> (Vec<f64>, Vec<f64>) {
        let get = |k: &str| self.initial.get(k).copied().unwrap_or(0.0);
        let q = self.coordinates.iter().map(|c| get(c)).collect();
        let qd = self
            .coordinates
            .iter()
            .map(|c| get(&noetherq_core::classical::velocity_name(c)))
            .collect();
        (q, qd)
    }

    pub fn dho_params(&self) -> Result<DhoParams, ModelError> {
        let spec = self
            .quantum
            .as_ref()
            .ok_or_else(|| ModelError::Invalid(format!("model `{}` has no [quantum] section", self.name)))?;
        Ok(DhoParams {
            m: spec.mass.resolve(&self.params)?,
            omega0: spec.omega0.resolve(&self.params)?,
            gamma: spec.gamma.resolve(&self.params)?,
            hbar: spec.hbar,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_parse() {
        for (name, _) in BUILTINS {
            let m = ModelFile::load(name).unwrap();
            assert_eq!(&m.name, name);
        }
        let b = ModelFile::load("bateman").unwrap();
        assert_eq!(b.coordinates, ["x"]);
        assert_eq!(b.params.get("G"), Some(0.1));
        assert_eq!(b.gamma_param(), Some("G"));
        assert_eq!(b.initial_state(), (vec![1.0], vec![0.0]));
        assert_eq!(b.quantum.as_ref().unwrap().n, 2048);
    }

    #[test]
    fn unbound_variable_is_named() {
        let err = ModelFile::parse("[model]\ncoordinates = x\nlagrangian = xd^2 - k*x^2\n", "m").unwrap_err();
        assert!(err.to_string().contains("`k`"), "{err}");
    }

    #[test]
    fn syntax_errors_carry_lines() {
        let err = ModelFile::parse("[model]\ncoordinates = x\nlagrangian xd^2\n", "m").unwrap_err();
        assert!(err.to_string().starts_with("line 3"), "{err}");
        let err = ModelFile::parse("[model]\ncoordinates = x\nlagrangian = xd^^2\n", "m").unwrap_err();
        assert!(err.to_string().contains("lagrangian"), "{err}");
        assert!(matches!(ModelFile::load("nonexistent"), Err(ModelError::NotFound(_))));
    }

    #[test]
    fn ansatz_overrides() {
        let text = "[model]\ncoordinates = x\nlagrangian = xd^2\n[ansatz]\nxi0 = 1\nxi = x, t\n";
        let m = ModelFile::parse(text, "m").unwrap();
        let ps = noetherq_core::parametrize::lift(&m.system().unwrap()).unwrap();
        let basis = m.ansatz_basis(&ps).unwrap();
        assert_eq!(basis.basis0, vec![Expr::one()]);
        assert_eq!(basis.basis[0], vec![Expr::var("x"), Expr::var("t")]);
    }
}
