//! Machine-readable run reports: JSON plus CSV probability tables.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dilation::DilationResiduals;
use crate::error::{Error, Result};
use crate::measurement::{DominanceReport, MeMethod, OimMethod};
use crate::protocol::MapKind;

pub const RNG_ALGORITHM: &str = "chacha20 (rand_chacha 0.9, seed_from_u64, stream = message index)";

/// JSON schema of [`RunReport`].
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Residual {
    pub fn new(value: f64, tolerance: f64) -> Self {
        Residual {
            value,
            tolerance,
            pass: value <= tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactReport {
    pub messages: usize,
    pub rank: usize,
    pub dim: usize,
    pub observers: usize,
    pub preprocessing: MapKind,
    pub composite_dim: usize,
    pub p_target: f64,
    pub p_achieved: f64,
    pub unamb_threshold: f64,
    pub avg_correct: f64,
    pub avg_failure: f64,
    /// Receiver `P[k|m]`, rows by message, failure last.
    pub probabilities: Vec<Vec<f64>>,
    /// `Tr(ρ_m Π_k)` of the inconclusive measurement itself.
    pub oim_probabilities: Vec<Vec<f64>>,
    pub oim_method: OimMethod,
    pub me_method: MeMethod,
    pub me_correct: f64,
    pub me_certified: bool,
    pub dilation: DilationResiduals,
    pub secrecy: f64,
    pub equivalence: f64,
    pub me_residual: f64,
    pub dominance: Option<DominanceReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub trials: u64,
    pub rng_seed: u64,
    pub counts: Vec<Vec<u64>>,
    pub frequencies: Vec<Vec<f64>>,
    pub std_errors: Vec<Vec<f64>>,
    /// Largest `|P̂ − P| / √(P(1−P)/trials)`.
    pub max_sigma: f64,
    pub max_tv_to_exact: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub subset: Vec<usize>,
    pub strategy: String,
    pub trials: u64,
    pub rng_seed: u64,
    pub exact_tv: f64,
    pub empirical_tv: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub version: String,
    pub rng_algorithm: String,
    pub rng_seed: u64,
    pub group_orders: Vec<usize>,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub exact: ExactReport,
    pub monte_carlo: Option<MonteCarloReport>,
    pub attack: Option<AttackReport>,
    pub residuals: BTreeMap<String, Residual>,
    pub meta: Meta,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.residuals.values().all(|r| r.pass)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.residuals
            .iter()
            .filter(|(_, r)| !r.pass)
            .map(|(k, _)| k.as_str())
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|source| Error::Serde {
            path: PathBuf::from("<report>"),
            source,
        })
    }
}

/// Files written by [`emit_report`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReportPaths {
    pub json: PathBuf,
    pub exact_csv: PathBuf,
    pub monte_carlo_csv: Option<PathBuf>,
}

/// Writes `report.json`, `exact.csv` and, when sampled, `monte_carlo.csv`
/// into `dir`.
pub fn emit_report(report: &RunReport, dir: &Path) -> Result<ReportPaths> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let json = dir.join("report.json");
    let mut text = report.to_json()?;
    text.push('\n');
    std::fs::write(&json, text).map_err(|source| Error::Io {
        path: json.clone(),
        source,
    })?;
    let exact_csv = dir.join("exact.csv");
    write_table(&exact_csv, &report.exact.probabilities)?;
    let monte_carlo_csv = match &report.monte_carlo {
        Some(mc) => {
            let path = dir.join("monte_carlo.csv");
            write_table(&path, &mc.frequencies)?;
            Some(path)
        }
        None => None,
    };
    Ok(ReportPaths {
        json,
        exact_csv,
        monte_carlo_csv,
    })
}

pub fn parse_report(path: &Path) -> Result<RunReport> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| Error::Serde {
        path: path.to_path_buf(),
        source,
    })
}

/// Header `message,0,…,M−1,?` then one row per message.
pub fn write_table(path: &Path, rows: &[Vec<f64>]) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let outcomes = rows.first().map_or(0, |r| r.len());
    let mut header = vec!["message".to_string()];
    header.extend((0..outcomes.saturating_sub(1)).map(|k| k.to_string()));
    header.push("?".to_string());
    w.write_record(&header).map_err(csv_err)?;
    for (m, row) in rows.iter().enumerate() {
        let mut record = vec![m.to_string()];
        record.extend(row.iter().map(|x| format!("{x:?}")));
        w.write_record(&record).map_err(csv_err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_table(path: &Path) -> Result<Vec<Vec<f64>>> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record.map_err(csv_err)?;
        let row = record
            .iter()
            .skip(1)
            .map(|x| x.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        rows.push(row);
    }
    Ok(rows)
}
