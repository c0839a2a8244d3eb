//! Named experiments: configuration, execution, and result files
//! (`results.json`, `cases.csv`, `config.toml`, `*.svg`).

mod catalog;
mod config;
pub mod plot;
mod runners;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use catalog::{catalog, describe, find, list, ExperimentInfo, OptionInfo, ToleranceInfo};
pub use config::{
    CorpusConfig, ExperimentConfig, FamilyConfig, GridConfig, LadderConfig, OptionValue, OutputConfig, ParamsConfig, SymbolConfig,
};
use plot::Plot;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Field {
    Number(f64),
    Text(String),
}

impl From<f64> for Field {
    fn from(v: f64) -> Self {
        Field::Number(v)
    }
}

impl From<usize> for Field {
    fn from(v: usize) -> Self {
        Field::Number(v as f64)
    }
}

impl From<bool> for Field {
    fn from(v: bool) -> Self {
        Field::Text(v.to_string())
    }
}

impl From<&str> for Field {
    fn from(v: &str) -> Self {
        Field::Text(v.to_string())
    }
}

impl From<String> for Field {
    fn from(v: String) -> Self {
        Field::Text(v)
    }
}

/// One measured case. Keys sort into the output order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Case {
    pub key: String,
    pub fields: BTreeMap<String, Field>,
}

impl Case {
    pub fn new(key: impl Into<String>) -> Self {
        Self { key: key.into(), fields: BTreeMap::new() }
    }

    pub fn set(mut self, name: &str, v: impl Into<Field>) -> Self {
        self.fields.insert(name.to_string(), v.into());
        self
    }

    pub fn number(&self, name: &str) -> Option<f64> {
        match self.fields.get(name) {
            Some(Field::Number(v)) => Some(*v),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = ">")]
    Above,
    #[serde(rename = "|.|<=")]
    AbsAtMost,
}

/// A pass/fail verdict and the tolerance it used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub description: String,
    pub value: f64,
    pub relation: Relation,
    pub threshold: f64,
    /// Tolerance key the threshold derives from.
    pub tolerance: String,
    pub tolerance_value: f64,
    pub passed: bool,
}

impl Check {
    /// `value relation threshold`, where the threshold derives from `tolerance`.
    pub fn new(name: &str, description: &str, value: f64, relation: Relation, threshold: f64, tolerance: (&str, f64)) -> Self {
        let passed = match relation {
            Relation::AtMost => value <= threshold,
            Relation::AtLeast => value >= threshold,
            Relation::Above => value > threshold,
            Relation::AbsAtMost => value.abs() <= threshold,
        };
        Self {
            name: name.to_string(),
            description: description.to_string(),
            value,
            relation,
            threshold,
            tolerance: tolerance.0.to_string(),
            tolerance_value: tolerance.1,
            passed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub case: String,
    pub error: String,
}

/// What a runner hands back before timing and serialization.
#[derive(Clone, Debug, Default)]
pub struct Report {
    pub cases: Vec<Case>,
    pub checks: Vec<Check>,
    pub failures: Vec<Failure>,
    pub plots: Vec<Plot>,
}

impl Report {
    /// Records `r` as a case, or as a failure with the case key.
    pub fn record(&mut self, key: &str, r: Result<Case>) {
        match r {
            Ok(c) => self.cases.push(c),
            Err(e) => self.fail(key, e),
        }
    }

    pub fn fail(&mut self, key: &str, e: Error) {
        self.failures.push(Failure { case: key.to_string(), error: e.to_string() });
        self.cases.push(Case::new(key).set("error", e.to_string()));
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultBundle {
    pub experiment: String,
    pub anchor: String,
    pub config: ExperimentConfig,
    pub cases: Vec<Case>,
    pub checks: Vec<Check>,
    pub failures: Vec<Failure>,
    pub passed: bool,
    pub wall_time_s: f64,
    pub version: String,
}

/// Runs the experiment and writes its files into `cfg.output.dir`.
pub fn run(cfg: &ExperimentConfig) -> Result<ResultBundle> {
    cfg.validate()?;
    let info = cfg.info()?;
    let start = Instant::now();
    let mut report = match (info.runner)(cfg) {
        Ok(r) => r,
        Err(e) => {
            let mut r = Report::default();
            r.fail("setup", e);
            r
        }
    };
    report.cases.sort_by(|a, b| a.key.cmp(&b.key));
    report.failures.sort_by(|a, b| a.case.cmp(&b.case));
    let passed = !report.checks.is_empty() && report.checks.iter().all(|c| c.passed) && report.failures.is_empty();
    let bundle = ResultBundle {
        experiment: info.name.to_string(),
        anchor: info.anchor.to_string(),
        config: cfg.clone(),
        cases: report.cases,
        checks: report.checks,
        failures: report.failures,
        passed,
        wall_time_s: start.elapsed().as_secs_f64(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    let plots = if cfg.output.plots { report.plots } else { Vec::new() };
    write_bundle(&bundle, &plots, &cfg.output.dir)?;
    Ok(bundle)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Long format `case,field,value`, rows ordered by case key then field.
pub fn cases_csv(cases: &[Case]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["case", "field", "value"]).map_err(csv_err)?;
    for c in cases {
        for (name, v) in &c.fields {
            let v = match v {
                Field::Number(x) => format!("{x:e}"),
                Field::Text(s) => s.clone(),
            };
            w.write_record([c.key.as_str(), name.as_str(), v.as_str()]).map_err(csv_err)?;
        }
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

pub fn write_bundle(bundle: &ResultBundle, plots: &[Plot], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("results.json"), serde_json::to_string_pretty(bundle)?)?;
    std::fs::write(dir.join("cases.csv"), cases_csv(&bundle.cases)?)?;
    std::fs::write(dir.join("config.toml"), bundle.config.to_toml()?)?;
    for p in plots {
        std::fs::write(dir.join(&p.file), plot::render(p))?;
    }
    Ok(())
}

/// One line per check, then failures.
pub fn summary(bundle: &ResultBundle) -> String {
    let mut out = String::new();
    for c in &bundle.checks {
        let rel = match c.relation {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
            Relation::Above => ">",
            Relation::AbsAtMost => "|.| <=",
        };
        out.push_str(&format!(
            "[{}] {}: {:.6e} {rel} {:.6e} ({} = {})\n",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.threshold,
            c.tolerance,
            c.tolerance_value
        ));
    }
    for f in &bundle.failures {
        out.push_str(&format!("[ERROR] {}: {}\n", f.case, f.error));
    }
    out.push_str(&format!(
        "{} {} in {:.2}s\n",
        bundle.experiment,
        if bundle.passed { "passed" } else { "FAILED" },
        bundle.wall_time_s
    ));
    out
}
