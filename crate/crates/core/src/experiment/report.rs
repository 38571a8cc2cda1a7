use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind, OutputFormat};
use crate::error::Result;
use crate::oracles::PotentialField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// No oracle was run for this pair.
    Unchecked,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Unchecked => "unchecked",
        }
    }
}

/// One row of the pair table: a bound, the oracle value it is compared
/// against, and the tolerance of the comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub i: usize,
    pub j: usize,
    pub delta_ij: f64,
    pub bound: f64,
    pub oracle_value: Option<f64>,
    pub stderr_or_tol: Option<f64>,
    pub verdict: Verdict,
}

/// Constants certified or computed for the model under study.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Constants {
    pub rho: Vec<f64>,
    pub kappa_max: f64,
    pub kappa_row_sum_max: f64,
    pub min_eigenvalue: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_pi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_tilde: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dominance_margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_tilde: Option<f64>,
}

/// Everything an experiment produced. Serializes deterministically; the
/// wall-clock metadata is added only when writing `report.json`.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub config: ExperimentConfig,
    pub constants: Constants,
    pub checks: BTreeMap<String, bool>,
    pub pairs: Vec<PairRow>,
    pub details: serde_json::Value,
    pub warnings: Vec<String>,
    pub pass: bool,
    #[serde(skip)]
    pub phi: Option<PotentialField>,
}

impl ExperimentReport {
    /// Names of failed checks and failed pairs.
    pub fn failures(&self) -> Vec<String> {
        let mut out: Vec<String> = self.checks.iter().filter(|(_, &ok)| !ok).map(|(k, _)| k.clone()).collect();
        out.extend(
            self.pairs.iter().filter(|p| p.verdict == Verdict::Fail).map(|p| format!("pair ({}, {})", p.i, p.j)),
        );
        out
    }

    /// JSON body without metadata; identical for identical config and seed.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// JSON body with a `metadata` field holding wall-clock information.
    pub fn to_json_with_metadata(&self) -> Result<String> {
        let mut value = serde_json::to_value(self)?;
        let seconds = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        value["metadata"] = serde_json::json!({
            "generated_unix_seconds": seconds,
            "crate_version": env!("CARGO_PKG_VERSION"),
        });
        Ok(serde_json::to_string_pretty(&value)?)
    }
}

fn format_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

/// Writes the pair table as CSV with full-precision scientific notation.
pub fn emit_pair_table<W: Write>(pairs: &[PairRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["i", "j", "delta_ij", "bound", "oracle_value", "stderr_or_tol", "verdict"])?;
    for p in pairs {
        w.write_record([
            p.i.to_string(),
            p.j.to_string(),
            format!("{:e}", p.delta_ij),
            format!("{:e}", p.bound),
            format_opt(p.oracle_value),
            format_opt(p.stderr_or_tol),
            p.verdict.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `report.json`, and for the CSV format `pairs.csv` and `phi.csv`
/// when a potential was solved. Returns the written paths.
pub fn write_outputs(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let json_path = dir.join("report.json");
    fs::write(&json_path, report.to_json_with_metadata()?)?;
    written.push(json_path);
    if report.config.format() == OutputFormat::Csv {
        let pairs_path = dir.join("pairs.csv");
        emit_pair_table(&report.pairs, fs::File::create(&pairs_path)?)?;
        written.push(pairs_path);
        if let Some(phi) = &report.phi {
            let phi_path = dir.join("phi.csv");
            phi.to_csv(std::io::BufWriter::new(fs::File::create(&phi_path)?))?;
            written.push(phi_path);
        }
    }
    Ok(written)
}
