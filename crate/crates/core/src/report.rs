//! Machine-readable run reports: one JSON document per run plus flat CSV
//! tables for plotting.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::Result;

/// How a failed check affects the exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    /// Exact identity or integrity test; failure always fails the run.
    Asserted,
    /// Empirical band with an unspecified constant; fails the run under `--strict`.
    Band,
    /// Recorded only.
    Info,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub scenario: String,
    pub kind: CheckKind,
    pub value: f64,
    /// The threshold `value` was compared against.
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    /// Passes when `value ≤ tolerance` (NaN fails).
    pub fn at_most(kind: CheckKind, name: &str, scenario: &str, value: f64, tolerance: f64) -> Self {
        Check {
            name: name.to_string(),
            scenario: scenario.to_string(),
            kind,
            value,
            tolerance,
            pass: value <= tolerance,
            detail: None,
        }
    }

    /// Passes when `value ≥ tolerance` (NaN fails).
    pub fn at_least(kind: CheckKind, name: &str, scenario: &str, value: f64, tolerance: f64) -> Self {
        Check {
            pass: value >= tolerance,
            ..Check::at_most(kind, name, scenario, value, tolerance)
        }
    }

    pub fn flag(kind: CheckKind, name: &str, scenario: &str, pass: bool) -> Self {
        Check {
            name: name.to_string(),
            scenario: scenario.to_string(),
            kind,
            value: if pass { 1.0 } else { 0.0 },
            tolerance: 1.0,
            pass,
            detail: None,
        }
    }

    /// A computation that errored, reported as a failed check.
    pub fn error(kind: CheckKind, name: &str, scenario: &str, err: &crate::error::Error) -> Self {
        Check {
            value: f64::NAN,
            tolerance: f64::NAN,
            pass: false,
            detail: Some(err.to_string()),
            ..Check::flag(kind, name, scenario, false)
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }

    pub fn fails_run(&self, strict: bool) -> bool {
        !self.pass && (self.kind == CheckKind::Asserted || (strict && self.kind == CheckKind::Band))
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push<I: IntoIterator<Item = String>>(&mut self, row: I) {
        self.rows.push(row.into_iter().collect());
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Section {
    pub name: String,
    pub runtime_s: f64,
    pub records: Vec<serde_json::Value>,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
}

impl Section {
    pub fn new(name: &str) -> Self {
        Section {
            name: name.to_string(),
            runtime_s: 0.0,
            records: Vec::new(),
            checks: Vec::new(),
            tables: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub seed: u64,
    pub strict: bool,
    pub weight: String,
    pub config: ExperimentConfig,
    pub sections: Vec<Section>,
    /// `scenario/check` of every check that fails the run.
    pub failures: Vec<String>,
    pub pass: bool,
}

impl Report {
    pub fn new(subcommand: &str, seed: u64, strict: bool, weight: String, config: ExperimentConfig) -> Self {
        Report {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            seed,
            strict,
            weight,
            config,
            sections: Vec::new(),
            failures: Vec::new(),
            pass: true,
        }
    }

    /// Recomputes `failures` and `pass` from the checks.
    pub fn finish(&mut self) {
        self.failures = self
            .sections
            .iter()
            .flat_map(|s| s.checks.iter().map(move |c| (s, c)))
            .filter(|(_, c)| c.fails_run(self.strict))
            .map(|(s, c)| format!("{}: {}/{}", s.name, c.scenario, c.name))
            .collect();
        self.pass = self.failures.is_empty();
    }

    pub fn checks(&self) -> impl Iterator<Item = &Check> {
        self.sections.iter().flat_map(|s| s.checks.iter())
    }

    /// Writes `report.json` and `<section>_<table>.csv` into `dir`; returns the written paths.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let json = dir.join("report.json");
        std::fs::write(&json, serde_json::to_string_pretty(self)?)?;
        written.push(json);
        for s in &self.sections {
            for t in &s.tables {
                let path = dir.join(format!("{}_{}.csv", s.name, t.name));
                t.write_csv(&path)?;
                written.push(path);
            }
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::WeightFamily;

    #[test]
    fn strictness_only_affects_bands() {
        let band = Check::at_most(CheckKind::Band, "spread", "s", 200.0, 100.0);
        let info = Check::at_most(CheckKind::Info, "x", "s", 2.0, 1.0);
        let hard = Check::at_most(CheckKind::Asserted, "y", "s", f64::NAN, 1.0);
        assert!(!band.fails_run(false) && band.fails_run(true));
        assert!(!info.fails_run(true));
        assert!(hard.fails_run(false));
    }

    #[test]
    fn writes_json_and_csv() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = Report::new("hankel", 42, false, "gaussian".into(), ExperimentConfig::new(WeightFamily::Gaussian, 1, 1));
        let mut s = Section::new("hankel");
        let mut t = Table::new("spectra", &["scenario", "n", "s_n"]);
        t.push(["z".to_string(), "0".to_string(), "1".to_string()]);
        s.tables.push(t);
        s.checks.push(Check::at_most(CheckKind::Asserted, "isometry", "z", 1e-12, 1e-9));
        r.sections.push(s);
        r.finish();
        assert!(r.pass);
        let files = r.write(dir.path()).unwrap();
        assert_eq!(files.len(), 2);
        let csv = std::fs::read_to_string(dir.path().join("hankel_spectra.csv")).unwrap();
        assert_eq!(csv, "scenario,n,s_n\nz,0,1\n");
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&files[0]).unwrap()).unwrap();
        assert_eq!(v["seed"], 42);
        assert_eq!(v["sections"][0]["checks"][0]["pass"], true);
    }
}
