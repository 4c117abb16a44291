use crate::error::Result;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const CSV_HEADER: &str = "check,paper_ref,value,threshold,error_bar,pass,runtime_ms";

/// How a row's threshold was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdSource {
    /// Closed form or inequality from the theory.
    Theory,
    /// A configured cap on an empirical constant.
    Configured,
    /// No threshold; the value is a measured output.
    Measured,
}

/// One check of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub check: String,
    pub paper_ref: String,
    pub value: f64,
    pub threshold: f64,
    pub error_bar: f64,
    pub pass: bool,
    pub source: ThresholdSource,
    /// Always written as 0 so reruns are byte-identical.
    pub runtime_ms: u64,
}

impl Row {
    /// `value + error_bar ≤ threshold`.
    pub fn at_most(check: impl Into<String>, paper_ref: &str, value: f64, error_bar: f64, threshold: f64, source: ThresholdSource) -> Self {
        let pass = value + error_bar <= threshold;
        Self::new(check, paper_ref, value, threshold, error_bar, pass, source)
    }

    /// `value - error_bar ≥ threshold`.
    pub fn at_least(check: impl Into<String>, paper_ref: &str, value: f64, error_bar: f64, threshold: f64, source: ThresholdSource) -> Self {
        let pass = value - error_bar >= threshold;
        Self::new(check, paper_ref, value, threshold, error_bar, pass, source)
    }

    /// A measured output; passes unless it is NaN.
    pub fn measured(check: impl Into<String>, paper_ref: &str, value: f64, error_bar: f64) -> Self {
        Self::new(check, paper_ref, value, f64::NAN, error_bar, !value.is_nan(), ThresholdSource::Measured)
    }

    pub fn new(
        check: impl Into<String>,
        paper_ref: &str,
        value: f64,
        threshold: f64,
        error_bar: f64,
        pass: bool,
        source: ThresholdSource,
    ) -> Self {
        Self { check: check.into(), paper_ref: paper_ref.to_string(), value, threshold, error_bar, pass, source, runtime_ms: 0 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Environment {
    pub crate_version: &'static str,
    pub test_functions: u32,
    pub os: &'static str,
    pub arch: &'static str,
}

impl Default for Environment {
    fn default() -> Self {
        Self { crate_version: env!("CARGO_PKG_VERSION"), test_functions: super::functions::LIBRARY_VERSION, os: std::env::consts::OS, arch: std::env::consts::ARCH }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
    pub environment: Environment,
    pub rows: Vec<Row>,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn csv_number(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:e}")
    }
}

impl ExperimentReport {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                csv_field(&r.check),
                csv_field(&r.paper_ref),
                csv_number(r.value),
                csv_number(r.threshold),
                csv_number(r.error_bar),
                r.pass,
                r.runtime_ms
            );
        }
        out
    }

    pub fn summary_json(&self) -> String {
        #[derive(Serialize)]
        struct Summary<'a> {
            experiment: &'a str,
            config_hash: &'a str,
            seed: u64,
            environment: &'a Environment,
            rows: usize,
            failed: Vec<&'a str>,
            pass: bool,
            checks: &'a [Row],
        }
        let s = Summary {
            experiment: &self.experiment,
            config_hash: &self.config_hash,
            seed: self.seed,
            environment: &self.environment,
            rows: self.rows.len(),
            failed: self.rows.iter().filter(|r| !r.pass).map(|r| r.check.as_str()).collect(),
            pass: self.pass(),
            checks: &self.rows,
        };
        let mut text = serde_json::to_string_pretty(&s).expect("summary serializes");
        text.push('\n');
        text
    }

    /// Writes `<experiment>.csv` and `<experiment>.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let csv = dir.join(format!("{}.csv", self.experiment));
        let json = dir.join(format!("{}.json", self.experiment));
        std::fs::write(&csv, self.to_csv())?;
        std::fs::write(&json, self.summary_json())?;
        Ok((csv, json))
    }
}
