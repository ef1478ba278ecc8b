use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

/// Version of the JSON report layout.
pub const SCHEMA_VERSION: u32 = 1;

/// One verified quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub expected: f64,
    /// How `value` is compared with `expected`.
    pub relation: String,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, expected: bound, relation: "<=".into(), pass: value <= bound }
    }

    pub fn below(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, expected: bound, relation: "<".into(), pass: value < bound }
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, expected: bound, relation: ">=".into(), pass: value >= bound }
    }

    pub fn close(name: impl Into<String>, value: f64, expected: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            value,
            expected,
            relation: format!("abs diff <= {tol:e}"),
            pass: (value - expected).abs() <= tol,
        }
    }

    pub fn rel_close(name: impl Into<String>, value: f64, expected: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            value,
            expected,
            relation: format!("rel diff <= {tol:e}"),
            pass: ((value - expected) / expected).abs() <= tol,
        }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self {
            name: name.into(),
            value: f64::from(u8::from(ok)),
            expected: 1.0,
            relation: "holds".into(),
            pass: ok,
        }
    }

    pub fn equal_count(name: impl Into<String>, value: usize, expected: usize) -> Self {
        Self { name: name.into(), value: value as f64, expected: expected as f64, relation: "==".into(), pass: value == expected }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub elapsed_ms: f64,
}

/// Result of one invocation. Everything except `timing` is a function of the
/// echoed configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub subcommand: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub checks: Vec<Check>,
    /// Side files, relative to the output directory.
    pub artifacts: Vec<String>,
    pub timing: Timing,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises") + "\n"
    }
}

/// Output directory and the side files written into it.
#[derive(Debug)]
pub struct Artifacts {
    dir: PathBuf,
    names: Vec<String>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), names: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Path for a new side file, recorded under `name`.
    pub fn path(&mut self, name: &str) -> PathBuf {
        self.names.push(name.to_string());
        self.dir.join(name)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> anyhow::Result<()> {
        let text = serde_json::to_string_pretty(value)? + "\n";
        std::fs::write(self.path(name), text)?;
        Ok(())
    }

    pub fn into_names(self) -> Vec<String> {
        self.names
    }
}
