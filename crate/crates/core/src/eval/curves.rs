use std::io::Write;

use super::{summarize, EvalError};
use crate::trainer::RunResult;

/// Dev accuracy across runs at one recorded step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub step: usize,
    pub epoch: usize,
    pub mean_accuracy: f64,
    /// Population variance across runs.
    pub variance: f64,
    pub n_runs: usize,
}

pub const CURVES_CSV_HEADER: [&str; 5] = ["step", "epoch", "mean_accuracy", "variance", "n_runs"];

/// Aggregates the dev curves of several runs point by point and writes them
/// as CSV. All runs must have recorded the same steps.
pub fn export_curves<W: Write>(w: W, results: &[RunResult]) -> Result<Vec<CurveRow>, EvalError> {
    let first = results.first().ok_or(EvalError::Empty)?;
    for r in results {
        if r.curve.len() != first.curve.len() {
            return Err(EvalError::Misaligned(format!(
                "seed {} has {} points, seed {} has {}",
                r.seed,
                r.curve.len(),
                first.seed,
                first.curve.len()
            )));
        }
        if let Some((a, b)) = r.curve.iter().zip(&first.curve).find(|(a, b)| a.step != b.step) {
            return Err(EvalError::Misaligned(format!(
                "seed {} has step {} where seed {} has step {}",
                r.seed, a.step, first.seed, b.step
            )));
        }
    }
    let mut rows = Vec::with_capacity(first.curve.len());
    for (i, point) in first.curve.iter().enumerate() {
        let values: Vec<f64> = results.iter().map(|r| r.curve[i].dev_accuracy).collect();
        let s = summarize(&values)?;
        rows.push(CurveRow {
            step: point.step,
            epoch: point.epoch,
            mean_accuracy: s.mean,
            variance: s.std * s.std,
            n_runs: s.n,
        });
    }
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CURVES_CSV_HEADER)?;
    for r in &rows {
        out.write_record([
            r.step.to_string(),
            r.epoch.to_string(),
            r.mean_accuracy.to_string(),
            r.variance.to_string(),
            r.n_runs.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(rows)
}
