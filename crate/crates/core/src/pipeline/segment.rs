//! Rule-based sentence segmentation.
//!
//! A sentence ends at `.`, `!` or `?` (plus any closing quotes or brackets)
//! when the next non-space character starts a new sentence: an uppercase
//! letter, a digit or an opening quote. A period does not end a sentence
//! after a known abbreviation or a single-letter initial. A blank line always
//! ends a sentence.

use std::ops::Range;

const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "st", "mt", "ft", "jr", "sr", "gen", "gov", "sen", "rep", "lt", "col", "capt",
    "sgt", "rev", "vs", "etc", "inc", "ltd", "co", "corp", "no", "jan", "feb", "mar", "apr", "jun", "jul", "aug",
    "sep", "sept", "oct", "nov", "dec", "approx", "dept", "univ", "ave", "blvd", "rd",
];

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201D}' | '\u{2019}')
}

fn is_opener(c: char) -> bool {
    matches!(c, '"' | '\'' | '(' | '[' | '\u{201C}' | '\u{2018}')
}

/// The alphabetic word ending right before position `dot`, lowercased.
fn word_before(chars: &[char], dot: usize) -> String {
    let mut start = dot;
    while start > 0 && chars[start - 1].is_alphabetic() {
        start -= 1;
    }
    chars[start..dot].iter().flat_map(|c| c.to_lowercase()).collect()
}

fn is_abbreviation(chars: &[char], dot: usize) -> bool {
    let word = word_before(chars, dot);
    if word.is_empty() {
        return false;
    }
    // Initials such as "J." or the pieces of "U.S.".
    if word.chars().count() == 1 {
        return true;
    }
    ABBREVIATIONS.contains(&word.as_str())
}

/// Sentence character ranges, trimmed of surrounding whitespace, in order.
/// Whitespace between sentences belongs to none of them.
pub fn split_sentences(text: &str) -> Vec<Range<usize>> {
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();
    let mut cuts = Vec::new();
    let mut i = 0;
    while i < n {
        let c = chars[i];
        if c == '\n' {
            let mut j = i + 1;
            while j < n && chars[j].is_whitespace() && chars[j] != '\n' {
                j += 1;
            }
            if j < n && chars[j] == '\n' {
                cuts.push(i);
                i = j + 1;
                continue;
            }
        }
        if matches!(c, '.' | '!' | '?') {
            let mut end = i + 1;
            while end < n && (matches!(chars[end], '.' | '!' | '?') || is_closer(chars[end])) {
                end += 1;
            }
            let mut next = end;
            while next < n && chars[next].is_whitespace() {
                next += 1;
            }
            let spaced = next > end;
            let starts_sentence = next < n && (chars[next].is_uppercase() || chars[next].is_numeric() || is_opener(chars[next]));
            let abbreviation = c == '.' && end == i + 1 && is_abbreviation(&chars, i);
            if spaced && starts_sentence && !abbreviation {
                cuts.push(end);
            }
            i = end;
            continue;
        }
        i += 1;
    }
    cuts.push(n);
    let mut out = Vec::new();
    let mut start = 0;
    for cut in cuts {
        let mut s = start;
        let mut e = cut;
        while s < e && chars[s].is_whitespace() {
            s += 1;
        }
        while e > s && chars[e - 1].is_whitespace() {
            e -= 1;
        }
        if s < e {
            out.push(s..e);
        }
        start = cut;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pieces(text: &str) -> Vec<String> {
        let chars: Vec<char> = text.chars().collect();
        split_sentences(text).into_iter().map(|r| chars[r].iter().collect()).collect()
    }

    #[test]
    fn splits_on_terminal_punctuation() {
        assert_eq!(pieces("Paris is big. Rome is old! Is Oslo cold? yes"), ["Paris is big.", "Rome is old!", "Is Oslo cold? yes"]);
    }

    #[test]
    fn keeps_abbreviations_and_initials() {
        assert_eq!(pieces("Mr. Smith went to St. Louis. He left."), ["Mr. Smith went to St. Louis.", "He left."]);
        assert_eq!(pieces("The U.S. Army arrived. Then rain."), ["The U.S. Army arrived.", "Then rain."]);
        assert_eq!(pieces("J. R. Tolkien wrote it."), ["J. R. Tolkien wrote it."]);
    }

    #[test]
    fn needs_a_capital_or_digit_after() {
        assert_eq!(pieces("It cost 3.5 million. 40 people came."), ["It cost 3.5 million.", "40 people came."]);
        assert_eq!(pieces("see fig. a for details."), ["see fig. a for details."]);
        assert_eq!(pieces("He said \"Go.\" Then left."), ["He said \"Go.\"", "Then left."]);
    }

    #[test]
    fn blank_lines_separate() {
        assert_eq!(pieces("A title\n\nbody text here"), ["A title", "body text here"]);
        assert!(split_sentences("   ").is_empty());
        assert!(split_sentences("").is_empty());
    }

    #[test]
    fn ranges_are_char_offsets() {
        let text = "Zürich wins. Genève loses.";
        let r = split_sentences(text);
        assert_eq!(r, vec![0..12, 13..26]);
    }
}
