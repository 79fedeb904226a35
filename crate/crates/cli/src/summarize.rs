//! Per (algorithm, grid point) aggregates of one or more results files.

use std::io::{Read, Write};

use serde::Serialize;

use crate::bench::{ResultRow, COLUMNS};
use crate::config::Thresholds;

#[derive(Debug, thiserror::Error)]
pub enum SummaryError {
    #[error("results file is missing columns: {}", .0.join(", "))]
    MissingColumns(Vec<String>),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub algorithm: String,
    pub n: usize,
    pub m: usize,
    pub b: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub alpha: f64,
    pub runs: usize,
    pub failed_runs: usize,
    pub mean_gap_ratio: f64,
    pub max_gap_ratio: f64,
    pub mean_overflow_ratio: f64,
    pub max_overflow_ratio: f64,
    pub max_rounds_ratio: f64,
    /// Rows with `gap_over_alpha_n > C_gap`.
    pub gap_violations: usize,
    /// Rows with `overflow_s_over_alpha_b > C_feas`.
    pub overflow_violations: usize,
    /// Rows whose `audit_pass` starts with `fail`.
    pub audit_failures: usize,
}

/// Reads a results file; `#` lines are comments.
pub fn read_rows<R: Read>(input: R) -> Result<Vec<ResultRow>, SummaryError> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let headers = reader.headers()?.clone();
    let missing: Vec<String> = COLUMNS
        .iter()
        .filter(|c| !headers.iter().any(|h| h == **c))
        .map(|c| c.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(SummaryError::MissingColumns(missing));
    }
    reader.deserialize().map(|r| r.map_err(SummaryError::from)).collect()
}

fn mean_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let finite: Vec<f64> = values.filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = finite.iter().sum::<f64>() / finite.len() as f64;
    (mean, finite.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

/// Groups rows by algorithm and grid point in first-appearance order.
pub fn summarize(rows: &[ResultRow], thresholds: &Thresholds) -> Vec<SummaryRow> {
    type Key = (String, usize, usize, u64, u64, u64, u64);
    let key = |r: &ResultRow| -> Key {
        (
            r.algorithm.clone(),
            r.n,
            r.m,
            r.b.to_bits(),
            r.epsilon.to_bits(),
            r.delta.to_bits(),
            r.alpha.to_bits(),
        )
    };
    let mut groups: Vec<(Key, Vec<&ResultRow>)> = Vec::new();
    for row in rows {
        let k = key(row);
        match groups.iter_mut().find(|g| g.0 == k) {
            Some(g) => g.1.push(row),
            None => groups.push((k, vec![row])),
        }
    }
    groups
        .into_iter()
        .map(|(_, group)| {
            let first = group[0];
            let ok: Vec<&ResultRow> = group.iter().copied().filter(|r| r.is_ok()).collect();
            let (mean_gap_ratio, max_gap_ratio) = mean_max(ok.iter().map(|r| r.gap_over_alpha_n));
            let (mean_overflow_ratio, max_overflow_ratio) = mean_max(ok.iter().map(|r| r.overflow_s_over_alpha_b));
            SummaryRow {
                algorithm: first.algorithm.clone(),
                n: first.n,
                m: first.m,
                b: first.b,
                epsilon: first.epsilon,
                delta: first.delta,
                alpha: first.alpha,
                runs: group.len(),
                failed_runs: group.len() - ok.len(),
                mean_gap_ratio,
                max_gap_ratio,
                mean_overflow_ratio,
                max_overflow_ratio,
                max_rounds_ratio: mean_max(ok.iter().map(|r| r.rounds_bound_ratio)).1,
                gap_violations: ok.iter().filter(|r| r.gap_over_alpha_n > thresholds.c_gap).count(),
                overflow_violations: ok
                    .iter()
                    .filter(|r| r.overflow_s_over_alpha_b > thresholds.c_feas)
                    .count(),
                audit_failures: group.iter().filter(|r| r.audit_pass.starts_with("fail")).count(),
            }
        })
        .collect()
}

pub fn write_summary<W: Write>(out: W, summary: &[SummaryRow]) -> Result<(), csv::Error> {
    let mut writer = csv::Writer::from_writer(out);
    for row in summary {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}
