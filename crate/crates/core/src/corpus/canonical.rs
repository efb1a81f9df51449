//! Line-delimited canonical records.
//!
//! One JSON object per line with the fields `id`, `text`, `target_start`,
//! `target_end`, `label` (`"literal"` or `"metonymic"`), optional
//! `fine_label`, optional `pmw` and `dataset`. `pmw` is written only when the
//! sample's key differs from its folded target, which happens for masked or
//! otherwise rewritten samples. Blank lines are skipped on read.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CorpusError, Label, Sample};
use crate::text;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    id: String,
    text: String,
    target_start: usize,
    target_end: usize,
    label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fine_label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pmw: Option<String>,
    dataset: String,
}

/// Streaming reader over canonical records; yields samples in file order.
pub struct CanonicalReader<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
}

impl<R: BufRead> CanonicalReader<R> {
    pub fn new(reader: R) -> Self {
        CanonicalReader {
            lines: reader.lines(),
            line_no: 0,
        }
    }
}

impl CanonicalReader<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        Ok(CanonicalReader::new(BufReader::new(File::open(path)?)))
    }
}

impl<R: BufRead> Iterator for CanonicalReader<R> {
    type Item = Result<Sample, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(e.into())),
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            return Some(parse_line(&line, self.line_no));
        }
    }
}

fn parse_line(line: &str, line_no: usize) -> Result<Sample, CorpusError> {
    let rec: Record = serde_json::from_str(line).map_err(|e| CorpusError::Parse {
        line: line_no,
        message: e.to_string(),
    })?;
    let mut sample = Sample::new(
        rec.id,
        rec.text,
        rec.target_start,
        rec.target_end,
        rec.label,
        rec.dataset,
    )?;
    sample.fine_label = rec.fine_label;
    if let Some(pmw) = rec.pmw {
        sample.pmw_key = pmw;
    }
    Ok(sample)
}

/// Reads a whole canonical file.
pub fn load_canonical(path: impl AsRef<Path>) -> Result<Vec<Sample>, CorpusError> {
    CanonicalReader::open(path)?.collect()
}

fn to_record(s: &Sample) -> Record {
    let derived = text::fold(s.target());
    Record {
        id: s.id.clone(),
        text: s.text.clone(),
        target_start: s.target_start,
        target_end: s.target_end,
        label: s.label,
        fine_label: s.fine_label.clone(),
        pmw: (derived != s.pmw_key).then(|| s.pmw_key.clone()),
        dataset: s.dataset.clone(),
    }
}

pub fn write_canonical<W: Write>(mut w: W, samples: &[Sample]) -> Result<(), CorpusError> {
    for s in samples {
        let line = serde_json::to_string(&to_record(s)).expect("record serialization cannot fail");
        w.write_all(line.as_bytes())?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_canonical_file(path: impl AsRef<Path>, samples: &[Sample]) -> Result<(), CorpusError> {
    write_canonical(BufWriter::new(File::create(path)?), samples)
}
