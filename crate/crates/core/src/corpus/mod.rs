//! Canonical sample model, dataset ingestion, statistics and splits.

mod canonical;
mod convert;
mod split;
mod stats;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text;

pub use canonical::{load_canonical, write_canonical, write_canonical_file, CanonicalReader};
pub use convert::{convert_dataset, convert_dataset_with, wimcor_stream, ConvertOptions, SourceFormat};
pub use split::{split, SplitKind, SplitSpec};
pub use stats::{compute_stats, write_stats_csv, write_stats_table, DatasetStats};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid sample {id}: {reason}")]
    Validation { id: String, reason: String },
    #[error("record {index}: unknown label {label:?}")]
    UnknownLabel { index: usize, label: String },
    #[error("record {index}: {message}")]
    Convert { index: usize, message: String },
    #[error("invalid split specification: {0}")]
    InvalidSplit(String),
    #[error("lexical split infeasible: key {key:?} ({count} samples) cannot be placed within tolerance")]
    Infeasible { key: String, count: usize },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Coarse reading of a target mention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Literal,
    Metonymic,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Literal, Label::Metonymic];

    /// Class index used by the classifier head.
    pub fn index(self) -> usize {
        match self {
            Label::Literal => 0,
            Label::Metonymic => 1,
        }
    }

    pub fn from_index(idx: usize) -> Option<Label> {
        match idx {
            0 => Some(Label::Literal),
            1 => Some(Label::Metonymic),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Literal => "literal",
            Label::Metonymic => "metonymic",
        }
    }

    pub fn flip(self) -> Label {
        match self {
            Label::Literal => Label::Metonymic,
            Label::Metonymic => Label::Literal,
        }
    }

    pub fn parse(s: &str) -> Option<Label> {
        match s {
            "literal" => Some(Label::Literal),
            "metonymic" => Some(Label::Metonymic),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One sentence with one annotated target mention.
///
/// Offsets are character indices into `text`; the target occupies
/// `target_start..target_end`. `pmw_key` is the case-folded target surface
/// and is what lexical splits group on. Masked samples keep the key of the
/// original target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub id: String,
    pub text: String,
    pub target_start: usize,
    pub target_end: usize,
    pub label: Label,
    pub fine_label: Option<String>,
    pub pmw_key: String,
    pub dataset: String,
}

impl Sample {
    /// Builds a sample and checks the span invariants.
    pub fn new(
        id: impl Into<String>,
        text: impl Into<String>,
        target_start: usize,
        target_end: usize,
        label: Label,
        dataset: impl Into<String>,
    ) -> Result<Sample, CorpusError> {
        let id = id.into();
        let text = text.into();
        let surface = checked_target(&id, &text, target_start, target_end)?;
        let pmw_key = text::fold(surface);
        Ok(Sample {
            id,
            text,
            target_start,
            target_end,
            label,
            fine_label: None,
            pmw_key,
            dataset: dataset.into(),
        })
    }

    pub fn with_fine_label(mut self, fine: impl Into<String>) -> Sample {
        self.fine_label = Some(fine.into());
        self
    }

    /// The annotated surface form.
    pub fn target(&self) -> &str {
        text::char_slice(&self.text, self.target_start..self.target_end)
            .expect("sample span validated at construction")
    }

    pub fn span(&self) -> std::ops::Range<usize> {
        self.target_start..self.target_end
    }

    /// Re-checks the span invariants, e.g. after fields were edited directly.
    pub fn validate(&self) -> Result<(), CorpusError> {
        checked_target(&self.id, &self.text, self.target_start, self.target_end).map(|_| ())
    }
}

fn checked_target<'a>(
    id: &str,
    text: &'a str,
    start: usize,
    end: usize,
) -> Result<&'a str, CorpusError> {
    let invalid = |reason: String| CorpusError::Validation {
        id: id.to_string(),
        reason,
    };
    if start >= end {
        return Err(invalid(format!("empty or reversed span {start}..{end}")));
    }
    let surface = text::char_slice(text, start..end).ok_or_else(|| {
        invalid(format!(
            "span {start}..{end} exceeds text length {}",
            text::char_len(text)
        ))
    })?;
    if surface.trim() != surface || surface.trim().is_empty() {
        return Err(invalid(format!(
            "target {surface:?} has leading or trailing whitespace"
        )));
    }
    Ok(surface)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_derives_folded_key() {
        let s = Sample::new("s1", "Germany lost in the semi-final", 0, 7, Label::Metonymic, "t").unwrap();
        assert_eq!(s.pmw_key, "germany");
        assert_eq!(s.target(), "Germany");
    }

    #[test]
    fn whitespace_targets_are_rejected() {
        for (a, b) in [(7, 8), (6, 8), (0, 0), (3, 2), (0, 40)] {
            let err = Sample::new("bad", "Germany lost", a, b, Label::Literal, "t").unwrap_err();
            assert!(matches!(err, CorpusError::Validation { ref id, .. } if id == "bad"), "{a}..{b}");
        }
    }

    #[test]
    fn label_round_trips_through_index() {
        for l in Label::ALL {
            assert_eq!(Label::from_index(l.index()), Some(l));
            assert_eq!(Label::parse(l.as_str()), Some(l));
            assert_eq!(l.flip().flip(), l);
        }
    }
}
