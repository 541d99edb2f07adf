//! Machine-readable run reports. Floats are always printed with 17
//! significant digits so identical runs give byte-identical files.

use std::io::{self, Write};
use std::path::Path;

use serde_json::ser::{Formatter, Serializer};
use serde_json::{json, Map, Value};

pub const TOOL: &str = "noetherq";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

struct FixedFloats;

impl Formatter for FixedFloats {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Serializes with fixed-precision floats and two-space indentation.
pub fn to_json(value: &Value) -> String {
    let mut out = Vec::new();
    let mut ser = Serializer::with_formatter(&mut out, Pretty::default());
    serde::Serialize::serialize(value, &mut ser).expect("Value always serializes");
    String::from_utf8(out).expect("serde_json writes UTF-8")
}

/// `PrettyFormatter` with [`FixedFloats`] number output.
#[derive(Default)]
struct Pretty<'a>(serde_json::ser::PrettyFormatter<'a>);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.0.$name(w $(, $arg)*)
        })*
    };
}

impl Formatter for Pretty<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        FixedFloats.write_f64(writer, value)
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        FixedFloats.write_f32(writer, value)
    }

    delegate! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        begin_object_value();
        end_object_value();
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: Value,
    pub tolerance: Value,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub command: String,
    pub seed: u64,
    pub inputs: Map<String, Value>,
    pub derived: Map<String, Value>,
    pub results: Map<String, Value>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn new(command: &str, seed: u64) -> Self {
        Report {
            command: command.to_string(),
            seed,
            inputs: Map::new(),
            derived: Map::new(),
            results: Map::new(),
            checks: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn input(&mut self, key: &str, value: impl Into<Value>) {
        self.inputs.insert(key.to_string(), value.into());
    }

    pub fn derive(&mut self, key: &str, value: impl Into<Value>) {
        self.derived.insert(key.to_string(), value.into());
    }

    pub fn result(&mut self, key: &str, value: impl Into<Value>) {
        self.results.insert(key.to_string(), value.into());
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        self.warnings.push(message.into());
    }

    /// Records a check and returns whether it passed.
    pub fn check(
        &mut self,
        name: &str,
        pass: bool,
        value: impl Into<Value>,
        tolerance: impl Into<Value>,
        detail: &str,
    ) -> bool {
        self.checks.push(Check {
            name: name.to_string(),
            pass,
            value: value.into(),
            tolerance: tolerance.into(),
            detail: detail.to_string(),
        });
        pass
    }

    /// `value ≤ tolerance`; a NaN value fails.
    pub fn check_le(&mut self, name: &str, value: f64, tolerance: f64, detail: &str) -> bool {
        self.check(name, value <= tolerance, finite_or_null(value), tolerance, detail)
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_value(&self) -> Value {
        let checks: Vec<Value> = self
            .checks
            .iter()
            .map(|c| {
                json!({
                    "name": c.name,
                    "pass": c.pass,
                    "value": c.value,
                    "tolerance": c.tolerance,
                    "detail": c.detail,
                })
            })
            .collect();
        json!({
            "tool": TOOL,
            "version": VERSION,
            "command": self.command,
            "seed": self.seed,
            "inputs": self.inputs,
            "derived": self.derived,
            "results": self.results,
            "checks": checks,
            "warnings": self.warnings,
            "pass": self.passed(),
        })
    }

    pub fn to_json(&self) -> String {
        to_json(&self.to_value())
    }

    /// Writes `report.json` into `dir`.
    pub fn write(&self, dir: &Path) -> io::Result<()> {
        let mut text = self.to_json();
        text.push('\n');
        std::fs::write(dir.join("report.json"), text)
    }

    /// One line per check, for the terminal.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let status = if c.pass { "PASS" } else { "FAIL" };
            out.push_str(&format!("{status} {}", c.name));
            if !c.value.is_null() && !c.tolerance.is_null() {
                out.push_str(&format!(" ({} vs {})", short(&c.value), short(&c.tolerance)));
            }
            if !c.detail.is_empty() {
                out.push_str(&format!(": {}", c.detail));
            }
            out.push('\n');
        }
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        out.push_str(if self.passed() { "all checks passed\n" } else { "some checks failed\n" });
        out
    }
}

fn short(v: &Value) -> String {
    match v.as_f64() {
        Some(x) if v.is_f64() => format!("{x:.3e}"),
        _ => v.to_string(),
    }
}

/// JSON has no NaN or infinity; those become `null`.
pub fn finite_or_null(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_digits() {
        let text = to_json(&json!({"a": 0.1, "b": [1.0, -2.5e-300], "c": 3}));
        assert!(text.contains("\"a\": 1.0000000000000001e-1"), "{text}");
        assert!(text.contains("-2.5000000000000000e-300"), "{text}");
        assert!(text.contains("\"c\": 3"), "{text}");
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["a"].as_f64(), Some(0.1));
    }

    #[test]
    fn pass_tracks_checks() {
        let mut r = Report::new("derive", 7);
        assert!(r.check_le("small", 1e-9, 1e-8, ""));
        assert!(r.passed());
        assert!(!r.check_le("nan", f64::NAN, 1.0, ""));
        assert!(!r.passed());
        let v = r.to_value();
        assert_eq!(v["seed"], 7);
        assert_eq!(v["checks"][1]["value"], Value::Null);
        assert_eq!(v["pass"], false);
    }
}
