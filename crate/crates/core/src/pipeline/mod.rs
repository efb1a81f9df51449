//! End-to-end resolution of raw text: detect candidate mentions, classify
//! each one in its own sentence with only that mention masked, and keep the
//! literal locations for geoparsing.

mod documents;
mod gazetteer;
mod segment;

use std::fmt;
use std::io::Write;

use thiserror::Error;

use crate::corpus::{Label, Sample};
use crate::model::{forward, ModelError, ModelParams, Mode};
use crate::text;
use crate::tokenizer::{tokenize_align, truncate_around_span, TokenizerError, Vocab};
use crate::transforms::mask_target;

pub use documents::{read_documents, Document};
pub use gazetteer::{Gazetteer, GazetteerDetector};
pub use segment::split_sentences;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("document {doc_id:?}: no sentence contains the mention at offset {offset}")]
    Segmentation { doc_id: String, offset: usize },
    #[error("document {doc_id:?}, mention at {offset}: {source}")]
    Tokenize {
        doc_id: String,
        offset: usize,
        #[source]
        source: TokenizerError,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("gazetteer line {line}: {message}")]
    Gazetteer { line: usize, message: String },
    #[error("documents: {0}")]
    Documents(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EntityKind {
    Location,
    Organization,
}

impl EntityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Location => "LOC",
            EntityKind::Organization => "ORG",
        }
    }

    pub fn parse(s: &str) -> Option<EntityKind> {
        match s.to_ascii_uppercase().as_str() {
            "LOC" | "LOCATION" => Some(EntityKind::Location),
            "ORG" | "ORGANIZATION" => Some(EntityKind::Organization),
            _ => None,
        }
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A candidate mention; `start..end` are character offsets into the
/// document.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectedSpan {
    pub doc_id: String,
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub kind: EntityKind,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedMention {
    pub span: DetectedSpan,
    pub label: Label,
    /// Probability of `label`.
    pub score: f64,
}

/// Source of candidate mentions. Implementations may return overlapping
/// candidates; [`detect`] resolves them.
pub trait SpanDetector {
    fn candidates(&self, doc_id: &str, doc: &str) -> Vec<DetectedSpan>;
}

/// Keeps a non-overlapping subset: longer spans first, then the leftmost.
/// The result is sorted by position.
pub fn resolve_overlaps(mut spans: Vec<DetectedSpan>) -> Vec<DetectedSpan> {
    spans.sort_by(|a, b| (b.end - b.start).cmp(&(a.end - a.start)).then(a.start.cmp(&b.start)));
    let mut kept: Vec<DetectedSpan> = Vec::with_capacity(spans.len());
    for s in spans {
        if s.start < s.end && kept.iter().all(|k| s.end <= k.start || k.end <= s.start) {
            kept.push(s);
        }
    }
    kept.sort_by_key(|s| s.start);
    kept
}

/// Detected mentions of `doc`, non-overlapping and sorted by position.
pub fn detect<D: SpanDetector + ?Sized>(doc_id: &str, doc: &str, detector: &D) -> Vec<DetectedSpan> {
    resolve_overlaps(detector.candidates(doc_id, doc))
}

/// The sentence of `span` with only that mention replaced by the mask, as a
/// sample whose label is a placeholder.
pub fn masked_mention(doc: &str, sentences: &[std::ops::Range<usize>], span: &DetectedSpan) -> Result<Sample, PipelineError> {
    let sentence = sentences
        .iter()
        .find(|r| r.start <= span.start && span.end <= r.end)
        .ok_or_else(|| PipelineError::Segmentation {
            doc_id: span.doc_id.clone(),
            offset: span.start,
        })?;
    let text = text::char_slice(doc, sentence.clone()).expect("sentence range inside document");
    let id = format!("{}:{}-{}", span.doc_id, span.start, span.end);
    let sample = Sample::new(
        id,
        text,
        span.start - sentence.start,
        span.end - sentence.start,
        Label::Literal,
        "pipeline",
    )
    .map_err(|_| PipelineError::Segmentation {
        doc_id: span.doc_id.clone(),
        offset: span.start,
    })?;
    Ok(mask_target(&sample))
}

/// Runs detection, then classifies every mention with `classify`, which
/// receives the masked sentence and returns class probabilities.
pub fn resolve_with<D, F>(doc_id: &str, doc: &str, detector: &D, mut classify: F) -> Result<Vec<ResolvedMention>, PipelineError>
where
    D: SpanDetector + ?Sized,
    F: FnMut(&DetectedSpan, &Sample) -> Result<[f64; 2], PipelineError>,
{
    let spans = detect(doc_id, doc, detector);
    if spans.is_empty() {
        return Ok(Vec::new());
    }
    let sentences = split_sentences(doc);
    spans
        .into_iter()
        .map(|span| {
            let sample = masked_mention(doc, &sentences, &span)?;
            let probs = classify(&span, &sample)?;
            let label = if probs[Label::Metonymic.index()] > probs[Label::Literal.index()] {
                Label::Metonymic
            } else {
                Label::Literal
            };
            Ok(ResolvedMention {
                score: probs[label.index()],
                label,
                span,
            })
        })
        .collect()
}

/// Class probabilities of one masked sentence under `params`.
pub fn classify_masked(params: &ModelParams, vocab: &Vocab, sample: &Sample) -> Result<[f64; 2], PipelineError> {
    let tok_err = |source| PipelineError::Tokenize {
        doc_id: sample.id.clone(),
        offset: sample.target_start,
        source,
    };
    let input = tokenize_align(&sample.text, sample.span(), vocab).map_err(tok_err)?;
    let input = truncate_around_span(&input, params.config.max_positions).map_err(tok_err)?;
    Ok(forward(params, &input, Mode::Eval)?.probabilities())
}

/// Detects and classifies every mention in `doc`. The classifier should have
/// been trained on masked inputs, since that is what it sees here.
pub fn resolve<D: SpanDetector + ?Sized>(
    doc_id: &str,
    doc: &str,
    detector: &D,
    params: &ModelParams,
    vocab: &Vocab,
) -> Result<Vec<ResolvedMention>, PipelineError> {
    resolve_with(doc_id, doc, detector, |_, sample| classify_masked(params, vocab, sample))
}

/// Keeps the location mentions classified as literal.
pub fn literal_locations(mentions: &[ResolvedMention]) -> Vec<DetectedSpan> {
    mentions
        .iter()
        .filter(|m| m.span.kind == EntityKind::Location && m.label == Label::Literal)
        .map(|m| m.span.clone())
        .collect()
}

/// Literal toponyms of `doc`.
pub fn geoparse<D: SpanDetector + ?Sized>(
    doc_id: &str,
    doc: &str,
    detector: &D,
    params: &ModelParams,
    vocab: &Vocab,
) -> Result<Vec<DetectedSpan>, PipelineError> {
    Ok(literal_locations(&resolve(doc_id, doc, detector, params, vocab)?))
}

pub const MENTIONS_CSV_HEADER: [&str; 7] = ["doc_id", "start", "end", "surface", "label", "class", "score"];

pub fn write_mentions_csv<W: Write>(w: W, mentions: &[ResolvedMention]) -> Result<(), PipelineError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(MENTIONS_CSV_HEADER)?;
    for m in mentions {
        out.write_record([
            m.span.doc_id.clone(),
            m.span.start.to_string(),
            m.span.end.to_string(),
            m.span.surface.clone(),
            m.span.kind.to_string(),
            m.label.to_string(),
            m.score.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
