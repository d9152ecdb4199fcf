//! Rate-distortion and timing measurements and their CSV/JSON reports.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Single-component 1-D baseline.
    Default,
    Mc,
}

/// One compression run. `k` and `rho` are empty for baseline runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub dataset: String,
    pub field: String,
    pub method: Method,
    pub codec: u8,
    pub tau_rel: Option<f64>,
    pub tau_abs: f64,
    #[serde(rename = "CR")]
    pub cr: f64,
    pub eps_l2: f64,
    pub max_err: f64,
    pub t_encode: f64,
    pub t_decode: f64,
    pub k: Option<f64>,
    pub rho: Option<f64>,
}

impl RunRecord {
    pub fn within_bound(&self) -> bool {
        self.max_err <= self.tau_abs
    }

    fn tau_key(&self) -> f64 {
        self.tau_rel.unwrap_or(self.tau_abs)
    }
}

pub const REPORT_COLUMNS: [&str; 13] = [
    "dataset", "field", "method", "codec", "tau_rel", "tau_abs", "CR", "eps_l2", "max_err", "t_encode", "t_decode", "k",
    "rho",
];

/// Original over compressed size. A zero-byte payload yields infinity.
pub fn compression_ratio(original_bytes: u64, compressed_bytes: u64) -> f64 {
    original_bytes as f64 / compressed_bytes as f64
}

/// `‖x − y‖₂ / ‖x‖₂`.
pub fn rel_l2_error(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { expected: x.len(), actual: y.len() });
    }
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroNormReference);
    }
    let diff = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    Ok(diff / norm)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxError {
    pub value: f64,
    /// First vertex attaining the maximum; `None` for empty input.
    pub index: Option<usize>,
}

pub fn max_abs_error(x: &[f64], y: &[f64]) -> Result<MaxError> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { expected: x.len(), actual: y.len() });
    }
    let mut best = MaxError { value: 0.0, index: None };
    for (i, (a, b)) in x.iter().zip(y).enumerate() {
        let e = (a - b).abs();
        // NaN compares as the worst possible error
        if best.index.is_none() || e > best.value || (e.is_nan() && !best.value.is_nan()) {
            best = MaxError { value: e, index: Some(i) };
        }
    }
    Ok(best)
}

/// `CR_mc / CR_default` for two runs made with the same codec and bound.
pub fn improvement_ratio(mc: &RunRecord, default: &RunRecord) -> Result<f64> {
    if mc.codec != default.codec {
        return Err(Error::MismatchedRuns(format!("codec {} vs {}", mc.codec, default.codec)));
    }
    if mc.tau_rel != default.tau_rel || mc.tau_abs != default.tau_abs {
        return Err(Error::MismatchedRuns(format!(
            "bound {:?}/{} vs {:?}/{}",
            mc.tau_rel, mc.tau_abs, default.tau_rel, default.tau_abs
        )));
    }
    Ok(mc.cr / default.cr)
}

/// `(t_mc − t_default) / t_default`.
pub fn throughput_overhead(t_mc: f64, t_default: f64) -> f64 {
    (t_mc - t_default) / t_default
}

/// Runs `f` and returns its result with the elapsed wall time in seconds.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

fn sorted(records: &[RunRecord]) -> Vec<&RunRecord> {
    let mut out: Vec<&RunRecord> = records.iter().collect();
    out.sort_by(|a, b| {
        a.dataset
            .cmp(&b.dataset)
            .then_with(|| a.field.cmp(&b.field))
            .then_with(|| a.tau_key().total_cmp(&b.tau_key()))
            .then_with(|| a.method.cmp(&b.method))
    });
    out
}

/// CSV with a fixed column order, rows stably sorted by dataset, field,
/// bound and method.
pub fn emit_report(records: &[RunRecord]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(REPORT_COLUMNS).map_err(|e| Error::Report(e.to_string()))?;
    for r in sorted(records) {
        w.serialize(r).map_err(|e| Error::Report(e.to_string()))?;
    }
    w.into_inner().map_err(|e| Error::Report(e.to_string()))
}

/// Same rows as [`emit_report`], as a JSON array.
pub fn emit_report_json(records: &[RunRecord]) -> Result<Vec<u8>> {
    serde_json::to_vec_pretty(&sorted(records)).map_err(|e| Error::Report(e.to_string()))
}
