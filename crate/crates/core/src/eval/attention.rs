use std::io::Write;

use super::EvalError;
use crate::model::{extract_attention, AttentionTrace};

/// Distribution of per-sample target attention over one layer or a merged
/// range of layers (1-based, inclusive).
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionGroup {
    pub first_layer: usize,
    pub last_layer: usize,
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

impl AttentionGroup {
    pub fn label(&self) -> String {
        if self.first_layer == self.last_layer {
            self.first_layer.to_string()
        } else {
            format!("{}-{}", self.first_layer, self.last_layer)
        }
    }
}

pub const ATTENTION_CSV_HEADER: [&str; 9] = ["layers", "n", "min", "q1", "median", "q3", "max", "mean", "merged"];

/// Linear-interpolation quantile of sorted data (the common "type 7"
/// definition).
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn group(first_layer: usize, last_layer: usize, mut values: Vec<f64>) -> AttentionGroup {
    values.sort_by(f64::total_cmp);
    AttentionGroup {
        first_layer,
        last_layer,
        n: values.len(),
        min: values[0],
        q1: quantile(&values, 0.25),
        median: quantile(&values, 0.5),
        q3: quantile(&values, 0.75),
        max: values[values.len() - 1],
        mean: values.iter().sum::<f64>() / values.len() as f64,
    }
}

/// Quartile summaries of per-layer target attention across `traces`.
///
/// Layers numbered (from 1) below `merge_below` are pooled into one group;
/// `merge_below <= 2` therefore leaves every layer on its own.
pub fn attention_report(traces: &[AttentionTrace], merge_below: usize) -> Result<Vec<AttentionGroup>, EvalError> {
    let first = traces.first().ok_or(EvalError::Empty)?;
    let layers = first.layers.len();
    if layers == 0 {
        return Err(EvalError::Empty);
    }
    let mut per_layer: Vec<Vec<f64>> = vec![Vec::with_capacity(traces.len()); layers];
    for t in traces {
        if t.layers.len() != layers {
            return Err(EvalError::MixedLayers {
                expected: layers,
                found: t.layers.len(),
            });
        }
        for (l, v) in extract_attention(t).into_iter().enumerate() {
            per_layer[l].push(v);
        }
    }
    let merged = merge_below.saturating_sub(1).min(layers);
    let mut out = Vec::new();
    if merged > 0 {
        out.push(group(1, merged, per_layer[..merged].concat()));
    }
    for (l, values) in per_layer.into_iter().enumerate().skip(merged) {
        out.push(group(l + 1, l + 1, values));
    }
    Ok(out)
}

pub fn write_attention_csv<W: Write>(w: W, groups: &[AttentionGroup]) -> Result<(), EvalError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(ATTENTION_CSV_HEADER)?;
    for g in groups {
        out.write_record([
            g.label(),
            g.n.to_string(),
            g.min.to_string(),
            g.q1.to_string(),
            g.median.to_string(),
            g.q3.to_string(),
            g.max.to_string(),
            g.mean.to_string(),
            (g.first_layer != g.last_layer).to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
