use std::collections::HashSet;
use std::io::Write;

use serde::Serialize;

use super::{CorpusError, Label, Sample};

/// Per-dataset counts. Document length is counted in whitespace-separated
/// words.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct DatasetStats {
    pub n_literal: usize,
    pub n_metonymic: usize,
    pub n_total: usize,
    pub n_unique_pmw: usize,
    pub avg_doc_length_words: f64,
}

pub fn compute_stats(samples: &[Sample]) -> DatasetStats {
    if samples.is_empty() {
        return DatasetStats::default();
    }
    let n_literal = samples.iter().filter(|s| s.label == Label::Literal).count();
    let keys: HashSet<&str> = samples.iter().map(|s| s.pmw_key.as_str()).collect();
    let words: usize = samples.iter().map(|s| s.text.split_whitespace().count()).sum();
    DatasetStats {
        n_literal,
        n_metonymic: samples.len() - n_literal,
        n_total: samples.len(),
        n_unique_pmw: keys.len(),
        avg_doc_length_words: words as f64 / samples.len() as f64,
    }
}

pub const STATS_CSV_HEADER: [&str; 6] = [
    "dataset",
    "n_literal",
    "n_metonymic",
    "n_total",
    "n_unique_pmw",
    "avg_len",
];

pub fn write_stats_csv<W: Write>(w: W, rows: &[(String, DatasetStats)]) -> Result<(), CorpusError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(STATS_CSV_HEADER)?;
    for (name, s) in rows {
        out.write_record([
            name.clone(),
            s.n_literal.to_string(),
            s.n_metonymic.to_string(),
            s.n_total.to_string(),
            s.n_unique_pmw.to_string(),
            format!("{:.2}", s.avg_doc_length_words),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Aligned plain-text version of the stats table.
pub fn write_stats_table<W: Write>(mut w: W, rows: &[(String, DatasetStats)]) -> Result<(), CorpusError> {
    let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max(7);
    writeln!(
        w,
        "{:<width$} {:>9} {:>9} {:>9} {:>6} {:>8}",
        "Dataset", "#literal", "#metonym", "Total", "#PMWs", "Avg.len"
    )?;
    for (name, s) in rows {
        writeln!(
            w,
            "{:<width$} {:>9} {:>9} {:>9} {:>6} {:>8.1}",
            name, s.n_literal, s.n_metonymic, s.n_total, s.n_unique_pmw, s.avg_doc_length_words
        )?;
    }
    writeln!(w, "# avg.len counts whitespace-separated words per sample text")?;
    Ok(())
}
