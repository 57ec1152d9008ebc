//! Dataset ingestion, JSON reports and CSV tables.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use bandit_trust_core::{ArmDataset, ArmStats, ComplexityTable, PolicyReport, TrustOutcome};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::RunConfig;
use crate::error::{AppError, Result};
use crate::simulate::SweepRow;

/// Weights at or below this are left out of sparse policy maps.
pub const SPARSE_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Jsonl,
    Csv,
}

impl DataFormat {
    /// `.csv` means CSV; anything else is read as JSON lines.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => DataFormat::Csv,
            _ => DataFormat::Jsonl,
        }
    }
}

/// Groups samples by arm, keeping arms in first-seen order.
#[derive(Default)]
struct Grouper {
    index: HashMap<String, usize>,
    arms: Vec<(String, Vec<f64>)>,
}

impl Grouper {
    fn push(&mut self, arm: String, reward: f64) {
        let slot = match self.index.get(&arm) {
            Some(&i) => i,
            None => {
                self.index.insert(arm.clone(), self.arms.len());
                self.arms.push((arm, Vec::new()));
                self.arms.len() - 1
            }
        };
        self.arms[slot].1.push(reward);
    }

    fn finish(self, path: &Path) -> Result<ArmDataset> {
        if self.arms.is_empty() {
            return Err(AppError::EmptyFile { path: path.to_owned() });
        }
        Ok(ArmDataset::new(self.arms)?)
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| AppError::io(path, e))
}

/// Loads one record per pull: `{"arm": .., "reward": ..}` lines or a CSV
/// with `arm,reward` columns.
pub fn load_dataset(path: &Path, format: DataFormat) -> Result<ArmDataset> {
    read_dataset(BufReader::new(open(path)?), format, path)
}

/// Loads trajectory returns (`{"policy_id": .., "return": ..}` lines), one
/// arm per logging policy.
pub fn load_trajectory_returns(path: &Path) -> Result<ArmDataset> {
    read_jsonl(BufReader::new(open(path)?), path, "policy_id", "return")
}

/// [`load_dataset`] over any reader; `label` names the source in errors.
pub fn read_dataset<R: Read>(reader: R, format: DataFormat, label: &Path) -> Result<ArmDataset> {
    match format {
        DataFormat::Jsonl => read_jsonl(BufReader::new(reader), label, "arm", "reward"),
        DataFormat::Csv => read_csv(reader, label),
    }
}

pub fn read_trajectory_returns<R: Read>(reader: R, label: &Path) -> Result<ArmDataset> {
    read_jsonl(BufReader::new(reader), label, "policy_id", "return")
}

fn read_jsonl<R: BufRead>(reader: R, path: &Path, key_field: &str, value_field: &str) -> Result<ArmDataset> {
    let mut groups = Grouper::default();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| AppError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fail = |message: String| AppError::Parse { path: path.to_owned(), line: line_no, message };
        let record: Value = serde_json::from_str(&line).map_err(|e| fail(format!("invalid JSON: {e}")))?;
        let key = match record.get(key_field) {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Number(n)) => n.to_string(),
            Some(_) => return Err(fail(format!("`{key_field}` must be a string"))),
            None => return Err(fail(format!("missing `{key_field}`"))),
        };
        let reward = match record.get(value_field) {
            Some(Value::Number(n)) => n.as_f64(),
            Some(Value::String(s)) => s.trim().parse::<f64>().ok(),
            Some(_) => None,
            None => return Err(fail(format!("missing `{value_field}`"))),
        };
        match reward {
            Some(r) if r.is_finite() => groups.push(key, r),
            _ => return Err(fail(format!("`{value_field}` is not a finite number"))),
        }
    }
    groups.finish(path)
}

fn read_csv<R: Read>(reader: R, path: &Path) -> Result<ArmDataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let column = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| AppError::Parse {
            path: path.to_owned(),
            line: 1,
            message: format!("missing `{name}` column"),
        })
    };
    let (arm_col, reward_col) = (column("arm")?, column("reward")?);
    let mut groups = Grouper::default();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let fail = |message: String| AppError::Parse { path: path.to_owned(), line, message };
        let arm = record.get(arm_col).ok_or_else(|| fail("missing arm".into()))?;
        let raw = record.get(reward_col).ok_or_else(|| fail("missing reward".into()))?;
        match raw.parse::<f64>() {
            Ok(r) if r.is_finite() => groups.push(arm.to_owned(), r),
            _ => return Err(fail(format!("reward `{raw}` is not a finite number"))),
        }
    }
    groups.finish(path)
}

/// Extra fields carried by trust-region and combined reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustDetails {
    pub eps0: f64,
    pub eps_star: f64,
    pub eps_star_over_eps0: f64,
    pub star_index: usize,
    pub g_hat_at_star: f64,
    pub m_used: usize,
    pub m0: usize,
}

impl TrustDetails {
    pub fn from_outcome(outcome: &TrustOutcome) -> Self {
        Self {
            eps0: outcome.grid.eps0(),
            eps_star: outcome.eps_star,
            eps_star_over_eps0: outcome.eps_star / outcome.grid.eps0(),
            star_index: outcome.star_index,
            g_hat_at_star: outcome.table.g_hat[outcome.star_index],
            m_used: outcome.table.m,
            m0: outcome.table.m0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmInterval {
    pub arm: String,
    pub r_hat: f64,
    pub half_width: f64,
    pub lower: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsSummary {
    pub d: usize,
    pub n_total: usize,
    pub fingerprint: String,
}

/// JSON report. Field order is the serialization order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub version: String,
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_from: Option<String>,
    /// `sparse` (weights above [`SPARSE_CUTOFF`]) or `dense`.
    pub policy_encoding: String,
    pub policy: serde_json::Map<String, Value>,
    pub empirical_value: f64,
    /// `null` when the method certifies nothing.
    pub lower_bound: Option<f64>,
    pub chosen_arm: Option<String>,
    pub seed: u64,
    pub config: RunConfig,
    pub stats: StatsSummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trust: Option<TrustDetails>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<ArmInterval>,
}

impl ReportDocument {
    pub fn new(
        report: &PolicyReport,
        arm_ids: &[String],
        stats: &ArmStats,
        config: &RunConfig,
        trust: Option<&TrustOutcome>,
        dense: bool,
    ) -> Self {
        let mut policy = serde_json::Map::new();
        for (id, &w) in arm_ids.iter().zip(report.policy.weights()) {
            if dense || w > SPARSE_CUTOFF {
                policy.insert(id.clone(), Value::from(w));
            }
        }
        let diagnostics = report
            .diagnostics
            .iter()
            .zip(arm_ids)
            .map(|(x, id)| ArmInterval { arm: id.clone(), r_hat: x.r_hat, half_width: x.half_width, lower: x.lower })
            .collect();
        Self {
            version: env!("CARGO_PKG_VERSION").to_owned(),
            method: report.method.as_str().to_owned(),
            selected_from: report.selected_from.map(|m| m.as_str().to_owned()),
            policy_encoding: if dense { "dense" } else { "sparse" }.to_owned(),
            policy,
            empirical_value: report.empirical_value,
            lower_bound: report.lower_bound.is_finite().then_some(report.lower_bound),
            chosen_arm: report.chosen_arm.map(|i| arm_ids[i].clone()),
            seed: config.seed,
            config: config.clone(),
            stats: StatsSummary {
                d: stats.d(),
                n_total: stats.n_total(),
                fingerprint: format!("{:016x}", stats.fingerprint()),
            },
            trust: trust.map(TrustDetails::from_outcome),
            diagnostics,
        }
    }

    /// The certified bound with `null` read back as `-inf`.
    pub fn lower_bound(&self) -> f64 {
        self.lower_bound.unwrap_or(f64::NEG_INFINITY)
    }

    /// Policy weights in map order.
    pub fn weights(&self) -> Vec<(String, f64)> {
        self.policy.iter().map(|(k, v)| (k.clone(), v.as_f64().unwrap_or(f64::NAN))).collect()
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| AppError::io(path, e))?))
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out).and_then(|_| out.flush()).map_err(|e| AppError::io(path, e))
}

pub fn emit_report(doc: &ReportDocument, path: &Path) -> Result<()> {
    write_json(doc, path)
}

pub fn read_report(path: &Path) -> Result<ReportDocument> {
    Ok(serde_json::from_reader(BufReader::new(open(path)?))?)
}

/// Columns `eps, g_hat, m, m0, delta, seed`, largest radius first.
pub fn write_complexity_table<W: Write>(table: &ComplexityTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["eps", "g_hat", "m", "m0", "delta", "seed"])?;
    for (eps, g) in table.grid.values().iter().zip(&table.g_hat) {
        w.write_record([
            eps.to_string(),
            g.to_string(),
            table.m.to_string(),
            table.m0.to_string(),
            table.delta.to_string(),
            table.seed.to_string(),
        ])?;
    }
    w.flush().map_err(|e| AppError::io(PathBuf::from("<csv>"), e))
}

/// Columns `eps, eps_over_eps0, objective, g_hat, penalized_value,
/// true_value_if_known, certificate`; an unknown true value is left empty.
pub fn write_sweep<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["eps", "eps_over_eps0", "objective", "g_hat", "penalized_value", "true_value_if_known", "certificate"])?;
    for r in rows {
        w.write_record([
            r.eps.to_string(),
            r.eps_over_eps0.to_string(),
            r.objective.to_string(),
            r.g_hat.to_string(),
            r.penalized_value.to_string(),
            r.true_value.map(|v| v.to_string()).unwrap_or_default(),
            r.certificate.to_string(),
        ])?;
    }
    w.flush().map_err(|e| AppError::io(PathBuf::from("<csv>"), e))
}

pub fn write_csv_file(path: &Path, write: impl FnOnce(BufWriter<File>) -> Result<()>) -> Result<()> {
    write(create(path)?)
}
