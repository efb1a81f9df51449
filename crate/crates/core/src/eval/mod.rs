//! Metrics and report emission.
//!
//! Every report is a CSV with a fixed header; the table-shaped summaries are
//! also available as aligned plain text. Standard deviations use the
//! population convention throughout.

mod attention;
mod curves;
mod metrics;
pub mod reference;
mod tables;

use thiserror::Error;

pub use attention::{attention_report, write_attention_csv, AttentionGroup, ATTENTION_CSV_HEADER};
pub use curves::{export_curves, CurveRow, CURVES_CSV_HEADER};
pub use metrics::{accuracy, prf_over_folds, prf_toponyms, summarize, FoldPrf, MetricSummary, Prf, SpanRef};
pub use tables::{
    cross_domain, write_accuracy_csv, write_accuracy_table, write_cross_domain_csv, write_cross_domain_table,
    write_geoparse_csv, write_geoparse_table, AccuracyRow, CrossDomainCell, CrossDomainMatrix, DomainPair,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("nothing to evaluate")]
    Empty,
    #[error("{predicted} predictions for {gold} gold samples")]
    LengthMismatch { predicted: usize, gold: usize },
    #[error("position {index}: prediction for {predicted:?} but gold sample is {gold:?}")]
    IdMismatch {
        index: usize,
        predicted: String,
        gold: String,
    },
    #[error("document {doc:?}: gold spans {first:?} and {second:?} overlap")]
    OverlappingGold {
        doc: String,
        first: (usize, usize),
        second: (usize, usize),
    },
    #[error("invalid span {start}..{end} in document {doc:?}")]
    BadSpan { doc: String, start: usize, end: usize },
    #[error("attention traces have {found} layers, expected {expected}")]
    MixedLayers { expected: usize, found: usize },
    #[error("curves are not aligned: {0}")]
    Misaligned(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
