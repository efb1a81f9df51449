use std::ops::{Range, RangeInclusive};

use super::{TokenizerError, Vocab, CONTINUATION};
use crate::text;

/// A framed token sequence, `[CLS] pieces.. [SEP]`, optionally followed by
/// padding, with the target's token span and per-token character ranges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedInput {
    pub ids: Vec<u32>,
    /// First target token position (inclusive).
    pub target_start: usize,
    /// Last target token position (inclusive).
    pub target_end: usize,
    /// Source character range of each token; `None` for framing and padding.
    pub alignment: Vec<Option<Range<usize>>>,
}

impl TokenizedInput {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Number of target tokens.
    pub fn target_len(&self) -> usize {
        self.target_end - self.target_start + 1
    }

    pub fn target_range(&self) -> RangeInclusive<usize> {
        self.target_start..=self.target_end
    }

    /// Length without trailing padding.
    pub fn unpadded_len(&self) -> usize {
        self.ids.iter().rposition(|&id| id != Vocab::PAD).map_or(0, |p| p + 1)
    }

    /// Position of the closing `[SEP]`.
    pub fn sep_position(&self) -> usize {
        self.unpadded_len() - 1
    }

    /// Appends `n` padding tokens after `[SEP]`.
    pub fn padded(&self, n: usize) -> TokenizedInput {
        let mut out = self.clone();
        out.ids.extend(std::iter::repeat(Vocab::PAD).take(n));
        out.alignment.extend(std::iter::repeat(None).take(n));
        out
    }

    /// Folded surface of tokens `range`, with a single space wherever the
    /// underlying character ranges are not contiguous.
    pub fn decode(&self, vocab: &Vocab, range: RangeInclusive<usize>) -> String {
        let mut out = String::new();
        let mut prev_end: Option<usize> = None;
        for pos in range {
            let tok = vocab.token(self.ids[pos]).unwrap_or("[UNK]");
            let piece = tok.strip_prefix(CONTINUATION).unwrap_or(tok);
            let span = self.alignment[pos].clone();
            if let (Some(pe), Some(r)) = (prev_end, span.as_ref()) {
                if r.start != pe {
                    out.push(' ');
                }
            }
            out.push_str(piece);
            prev_end = span.map(|r| r.end);
        }
        out
    }

    /// The decoded target span.
    pub fn decode_target(&self, vocab: &Vocab) -> String {
        self.decode(vocab, self.target_range())
    }
}

/// Tokenizes `text` and locates the character span `span` in token space.
///
/// Out-of-vocabulary words become one `[UNK]` token covering the whole word.
/// Both ends of `span` must fall on token boundaries.
pub fn tokenize_align(text: &str, span: Range<usize>, vocab: &Vocab) -> Result<TokenizedInput, TokenizerError> {
    let chars: Vec<char> = text.chars().collect();
    if span.start >= span.end || span.end > chars.len() {
        return Err(TokenizerError::SpanOutOfRange {
            start: span.start,
            end: span.end,
            len: chars.len(),
        });
    }

    let mut ids = vec![Vocab::CLS];
    let mut alignment: Vec<Option<Range<usize>>> = vec![None];
    let mut folded = Vec::new();
    for word in text::word_ranges(&chars) {
        let raw = &chars[word.clone()];
        if raw == ['X'] {
            ids.push(Vocab::MASK);
            alignment.push(Some(word));
            continue;
        }
        folded.clear();
        folded.extend(raw.iter().map(|&c| text::fold_char(c)));
        match vocab.word_pieces(&folded) {
            Some(pieces) => {
                for (id, a, b) in pieces {
                    ids.push(id);
                    alignment.push(Some(word.start + a..word.start + b));
                }
            }
            None => {
                ids.push(Vocab::UNK);
                alignment.push(Some(word));
            }
        }
    }
    ids.push(Vocab::SEP);
    alignment.push(None);

    let misaligned = |reason: &str| TokenizerError::Alignment {
        start: span.start,
        end: span.end,
        reason: reason.to_string(),
    };
    let overlapping: Vec<usize> = (1..ids.len() - 1)
        .filter(|&p| {
            let r = alignment[p].as_ref().expect("content tokens are aligned");
            r.start < span.end && r.end > span.start
        })
        .collect();
    let (&first, &last) = overlapping
        .first()
        .zip(overlapping.last())
        .ok_or_else(|| misaligned("span covers no token"))?;
    if alignment[first].as_ref().unwrap().start != span.start {
        return Err(misaligned("span starts inside a token"));
    }
    if alignment[last].as_ref().unwrap().end != span.end {
        return Err(misaligned("span ends inside a token"));
    }
    Ok(TokenizedInput {
        ids,
        target_start: first,
        target_end: last,
        alignment,
    })
}

/// Cuts the input to at most `max_len` tokens, keeping the framing and the
/// whole target. The remaining budget is shared evenly between left and right
/// context, with any odd token going left; budget one side cannot use moves to
/// the other.
pub fn truncate_around_span(input: &TokenizedInput, max_len: usize) -> Result<TokenizedInput, TokenizerError> {
    let len = input.unpadded_len();
    if len <= max_len {
        let mut out = input.clone();
        out.ids.truncate(len);
        out.alignment.truncate(len);
        return Ok(out);
    }
    let d = input.target_len();
    if max_len < 2 || d > max_len - 2 {
        return Err(TokenizerError::TargetTooLong { target: d, max_len });
    }
    let budget = max_len - 2 - d;
    let left_avail = input.target_start - 1;
    let right_avail = len - 2 - input.target_end;
    let mut left = budget.div_ceil(2).min(left_avail);
    let right = (budget - left).min(right_avail);
    left = (budget - right).min(left_avail);

    let lo = input.target_start - left;
    let hi = input.target_end + right;
    let mut ids = Vec::with_capacity(max_len);
    let mut alignment = Vec::with_capacity(max_len);
    ids.push(Vocab::CLS);
    alignment.push(None);
    ids.extend_from_slice(&input.ids[lo..=hi]);
    alignment.extend_from_slice(&input.alignment[lo..=hi]);
    ids.push(Vocab::SEP);
    alignment.push(None);
    Ok(TokenizedInput {
        ids,
        target_start: input.target_start - lo + 1,
        target_end: input.target_end - lo + 1,
        alignment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenizer::build_vocab_from_texts;

    fn vocab() -> Vocab {
        build_vocab_from_texts(
            ["Vancouver welcomes you to New York and the vancouver games", "the city of york"],
            80,
        )
        .unwrap()
    }

    #[test]
    fn single_word_target_decodes_to_surface() {
        let v = vocab();
        let t = tokenize_align("Vancouver welcomes you", 0..9, &v).unwrap();
        assert_eq!(t.target_start, 1);
        assert_eq!(t.decode_target(&v), "vancouver");
        assert_eq!(t.ids[0], Vocab::CLS);
        assert_eq!(*t.ids.last().unwrap(), Vocab::SEP);
    }

    #[test]
    fn whole_text_target() {
        let v = vocab();
        let t = tokenize_align("Vancouver", 0..9, &v).unwrap();
        assert_eq!((t.target_start, t.target_end), (1, t.len() - 2));
    }

    #[test]
    fn multi_word_target() {
        let v = vocab();
        let text = "Welcome to New York today";
        let t = tokenize_align(text, 11..19, &v).unwrap();
        assert!(t.target_len() >= 2);
        assert_eq!(t.decode_target(&v), "new york");
    }

    #[test]
    fn unknown_words_keep_alignment() {
        let v = vocab();
        let t = tokenize_align("Zzyzx welcomes qqq", 0..5, &v).unwrap();
        assert_eq!(t.ids[1], Vocab::UNK);
        assert_eq!(t.alignment[1], Some(0..5));
    }

    #[test]
    fn mask_word_is_reserved_token() {
        let v = vocab();
        let t = tokenize_align("X welcomes you", 0..1, &v).unwrap();
        assert_eq!(t.ids[1], Vocab::MASK);
        assert_eq!(t.target_len(), 1);
        let lower = tokenize_align("x welcomes you", 0..1, &v).unwrap();
        assert_ne!(lower.ids[1], Vocab::MASK);
    }

    #[test]
    fn span_inside_a_word_is_rejected() {
        let v = vocab();
        assert!(matches!(
            tokenize_align("Vancouver welcomes you", 1..9, &v),
            Err(TokenizerError::Alignment { .. })
        ));
        assert!(matches!(
            tokenize_align("Vancouver welcomes you", 9..10, &v),
            Err(TokenizerError::Alignment { .. })
        ));
        assert!(matches!(
            tokenize_align("abc", 0..10, &v),
            Err(TokenizerError::SpanOutOfRange { .. })
        ));
    }

    fn synthetic(len: usize, target: RangeInclusive<usize>) -> TokenizedInput {
        let mut ids = vec![Vocab::CLS];
        let mut alignment = vec![None];
        for k in 0..len {
            ids.push(100 + k as u32);
            alignment.push(Some(2 * k..2 * k + 1));
        }
        ids.push(Vocab::SEP);
        alignment.push(None);
        TokenizedInput {
            ids,
            target_start: *target.start(),
            target_end: *target.end(),
            alignment,
        }
    }

    #[test]
    fn truncation_keeps_target_contiguous() {
        let input = synthetic(298, 150..=152);
        let out = truncate_around_span(&input, 256).unwrap();
        assert_eq!(out.len(), 256);
        assert_eq!(out.ids[0], Vocab::CLS);
        assert_eq!(out.ids[255], Vocab::SEP);
        assert_eq!(
            &out.ids[out.target_range()],
            &input.ids[input.target_range()]
        );
        // 251 context tokens: 126 left, 125 right.
        assert_eq!(out.target_start - 1, 126);
        assert_eq!(truncate_around_span(&out, 256).unwrap(), out);
    }

    #[test]
    fn truncation_shifts_unused_budget() {
        let input = synthetic(20, 2..=2);
        let out = truncate_around_span(&input, 10).unwrap();
        assert_eq!(out.len(), 10);
        assert_eq!(out.target_start, 2);
        assert_eq!(out.ids[1..9], input.ids[1..9]);
    }

    #[test]
    fn short_input_is_unchanged_and_long_target_fails() {
        let input = synthetic(10, 3..=4);
        assert_eq!(truncate_around_span(&input, 256).unwrap(), input);
        let huge = synthetic(300, 1..=300);
        assert!(matches!(
            truncate_around_span(&huge, 256),
            Err(TokenizerError::TargetTooLong { target: 300, .. })
        ));
    }
}
