//! Subword vocabulary induction and span-aligned tokenization.
//!
//! Text is case-folded and split into words (alphanumeric runs and single
//! punctuation characters). Words are cut into pieces by greedy
//! longest-match against the vocabulary; non-initial pieces carry the `##`
//! continuation marker. A word that is exactly `X` (upper case) is the mask
//! word and maps to the reserved [`Vocab::MASK`] id.

mod align;
mod vocab;

use thiserror::Error;

pub use align::{tokenize_align, truncate_around_span, TokenizedInput};
pub use vocab::{build_vocab, build_vocab_from_texts, Vocab};

/// Prefix of word-internal pieces.
pub const CONTINUATION: &str = "##";

/// Words longer than this many characters become a single unknown token.
pub const MAX_WORD_CHARS: usize = 100;

#[derive(Debug, Error)]
pub enum TokenizerError {
    #[error("vocabulary size {size} leaves no room beyond the {reserved} reserved tokens")]
    VocabTooSmall { size: usize, reserved: usize },
    #[error("vocabulary line {line}: {message}")]
    VocabFormat { line: usize, message: String },
    #[error("span {start}..{end} is outside a text of {len} characters")]
    SpanOutOfRange { start: usize, end: usize, len: usize },
    #[error("span {start}..{end} does not align with token boundaries: {reason}")]
    Alignment { start: usize, end: usize, reason: String },
    #[error("target of {target} tokens does not fit in {max_len} positions")]
    TargetTooLong { target: usize, max_len: usize },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
