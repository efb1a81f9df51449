//! Character-indexed text helpers shared by the corpus, tokenizer and pipeline.
//!
//! All offsets in this crate are Unicode scalar value indices, not byte
//! offsets.

use std::ops::Range;

/// Lower-cases one character, keeping a one-to-one character mapping.
///
/// Characters whose lower-case form expands to several characters keep only
/// the first one, so folded text always has the same length as its source.
pub fn fold_char(c: char) -> char {
    c.to_lowercase().next().unwrap_or(c)
}

pub fn fold(s: &str) -> String {
    s.chars().map(fold_char).collect()
}

pub fn char_len(s: &str) -> usize {
    s.chars().count()
}

/// Byte offset of the `idx`-th character, or `s.len()` when `idx` is the
/// character length.
pub fn byte_offset(s: &str, idx: usize) -> Option<usize> {
    if idx == 0 {
        return Some(0);
    }
    let mut count = 0;
    for (b, _) in s.char_indices() {
        if count == idx {
            return Some(b);
        }
        count += 1;
    }
    (count == idx).then_some(s.len())
}

pub fn char_slice(s: &str, range: Range<usize>) -> Option<&str> {
    if range.start > range.end {
        return None;
    }
    let start = byte_offset(s, range.start)?;
    let end = byte_offset(s, range.end)?;
    Some(&s[start..end])
}

/// Replaces the characters in `range` with `replacement`.
pub fn replace_chars(s: &str, range: Range<usize>, replacement: &str) -> Option<String> {
    let start = byte_offset(s, range.start)?;
    let end = byte_offset(s, range.end)?;
    if start > end {
        return None;
    }
    let mut out = String::with_capacity(s.len() + replacement.len());
    out.push_str(&s[..start]);
    out.push_str(replacement);
    out.push_str(&s[end..]);
    Some(out)
}

/// Word segmentation used by the tokenizer and the span detector: maximal
/// runs of alphanumeric characters, and every other non-whitespace character
/// as a word of its own.
pub fn word_ranges(chars: &[char]) -> Vec<Range<usize>> {
    let mut words = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_alphanumeric() {
            let start = i;
            while i < chars.len() && chars[i].is_alphanumeric() {
                i += 1;
            }
            words.push(start..i);
        } else {
            words.push(i..i + 1);
            i += 1;
        }
    }
    words
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slicing_uses_char_offsets() {
        let s = "Zürich ist schön";
        assert_eq!(char_slice(s, 0..6), Some("Zürich"));
        assert_eq!(char_slice(s, 11..16), Some("schön"));
        assert_eq!(char_slice(s, 11..17), None);
        assert_eq!(replace_chars(s, 0..6, "X").unwrap(), "X ist schön");
    }

    #[test]
    fn words_split_punctuation() {
        let chars: Vec<char> = "St. Louis, Mo.".chars().collect();
        let words: Vec<String> = word_ranges(&chars)
            .into_iter()
            .map(|r| chars[r].iter().collect())
            .collect();
        assert_eq!(words, ["St", ".", "Louis", ",", "Mo", "."]);
    }

    #[test]
    fn fold_is_length_preserving() {
        let s = "İstanbul ÅLAND";
        assert_eq!(char_len(&fold(s)), char_len(s));
        assert_eq!(fold("ÅLAND"), "åland");
    }
}
