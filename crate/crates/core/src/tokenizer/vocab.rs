use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{TokenizerError, CONTINUATION, MAX_WORD_CHARS};
use crate::corpus::Sample;
use crate::text;

/// Token inventory. Ids are positions; the reserved tokens come first in the
/// fixed order of [`Vocab::RESERVED`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocab {
    pub const PAD: u32 = 0;
    pub const UNK: u32 = 1;
    pub const CLS: u32 = 2;
    pub const SEP: u32 = 3;
    /// The mask word. Rendered as an upper-case `X`, which no case-folded
    /// piece can collide with.
    pub const MASK: u32 = 4;
    pub const RESERVED: [&'static str; 5] = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "X"];

    /// Builds a vocabulary from a token list that starts with the reserved
    /// tokens.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Vocab, TokenizerError> {
        for (i, r) in Self::RESERVED.iter().enumerate() {
            if tokens.get(i).map(String::as_str) != Some(*r) {
                return Err(TokenizerError::VocabFormat {
                    line: i + 1,
                    message: format!("expected reserved token {r:?}"),
                });
            }
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if t.is_empty() || t.contains(char::is_whitespace) {
                return Err(TokenizerError::VocabFormat {
                    line: i + 1,
                    message: format!("invalid token {t:?}"),
                });
            }
            if index.insert(t.clone(), i as u32).is_some() {
                return Err(TokenizerError::VocabFormat {
                    line: i + 1,
                    message: format!("duplicate token {t:?}"),
                });
            }
        }
        Ok(Vocab { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Splits one folded word into piece ids by greedy longest match. Returns
    /// `None` when some position has no matching piece.
    pub(crate) fn word_pieces(&self, folded: &[char]) -> Option<Vec<(u32, usize, usize)>> {
        if folded.len() > MAX_WORD_CHARS {
            return None;
        }
        let mut pieces = Vec::new();
        let mut start = 0;
        let mut buf = String::new();
        while start < folded.len() {
            let mut found = None;
            for end in (start + 1..=folded.len()).rev() {
                buf.clear();
                if start > 0 {
                    buf.push_str(CONTINUATION);
                }
                buf.extend(&folded[start..end]);
                if let Some(id) = self.id(&buf) {
                    found = Some((id, end));
                    break;
                }
            }
            let (id, end) = found?;
            pieces.push((id, start, end));
            start = end;
        }
        Some(pieces)
    }

    /// One token per line; the line number (from zero) is the id.
    pub fn write<W: Write>(&self, mut w: W) -> Result<(), TokenizerError> {
        for t in &self.tokens {
            writeln!(w, "{t}")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Vocab, TokenizerError> {
        let tokens = r.lines().collect::<Result<Vec<_>, _>>()?;
        Vocab::from_tokens(tokens)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TokenizerError> {
        self.write(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Vocab, TokenizerError> {
        Vocab::read(BufReader::new(File::open(path)?))
    }

    /// Short content hash, stored in checkpoints to detect vocabulary
    /// mismatches.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for t in &self.tokens {
            h.update(t.as_bytes());
            h.update(b"\n");
        }
        h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

pub fn build_vocab(samples: &[Sample], size: usize) -> Result<Vocab, TokenizerError> {
    build_vocab_from_texts(samples.iter().map(|s| s.text.as_str()), size)
}

/// Induces a vocabulary of at most `size` tokens by greedy frequency merges.
///
/// Starts from the single-character pieces of all words (most frequent first
/// if they do not all fit), then repeatedly merges the most frequent adjacent
/// piece pair, counting pairs weighted by word frequency. Ties go to the
/// lexicographically smallest pair.
pub fn build_vocab_from_texts<'a, I>(texts: I, size: usize) -> Result<Vocab, TokenizerError>
where
    I: IntoIterator<Item = &'a str>,
{
    let reserved = Vocab::RESERVED.len();
    if size <= reserved {
        return Err(TokenizerError::VocabTooSmall { size, reserved });
    }

    let mut word_freq: BTreeMap<Vec<char>, usize> = BTreeMap::new();
    for t in texts {
        let chars: Vec<char> = t.chars().collect();
        for r in text::word_ranges(&chars) {
            let word = &chars[r];
            if word == ['X'] || word.len() > super::MAX_WORD_CHARS {
                continue;
            }
            let folded: Vec<char> = word.iter().map(|&c| text::fold_char(c)).collect();
            *word_freq.entry(folded).or_default() += 1;
        }
    }

    // Symbol table for pieces.
    let mut symbols: Vec<String> = Vec::new();
    let mut symbol_id: HashMap<String, u32> = HashMap::new();
    let mut intern = |s: String, symbols: &mut Vec<String>| -> u32 {
        *symbol_id.entry(s.clone()).or_insert_with(|| {
            symbols.push(s);
            (symbols.len() - 1) as u32
        })
    };

    let mut words: Vec<(Vec<u32>, usize)> = Vec::with_capacity(word_freq.len());
    let mut piece_freq: HashMap<u32, usize> = HashMap::new();
    for (word, freq) in &word_freq {
        let pieces: Vec<u32> = word
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let s = if k == 0 { c.to_string() } else { format!("{CONTINUATION}{c}") };
                intern(s, &mut symbols)
            })
            .collect();
        for &p in &pieces {
            *piece_freq.entry(p).or_default() += freq;
        }
        words.push((pieces, *freq));
    }

    let mut alphabet: Vec<u32> = piece_freq.keys().copied().collect();
    alphabet.sort_by(|a, b| {
        piece_freq[b]
            .cmp(&piece_freq[a])
            .then_with(|| symbols[*a as usize].cmp(&symbols[*b as usize]))
    });
    alphabet.truncate(size - reserved);

    let mut tokens: Vec<String> = Vocab::RESERVED.iter().map(|s| s.to_string()).collect();
    let mut in_vocab: std::collections::HashSet<String> = tokens.iter().cloned().collect();
    for &a in &alphabet {
        let s = symbols[a as usize].clone();
        in_vocab.insert(s.clone());
        tokens.push(s);
    }
    let complete_alphabet = alphabet.len() == piece_freq.len();

    while complete_alphabet && tokens.len() < size {
        let mut pairs: HashMap<(u32, u32), usize> = HashMap::new();
        for (pieces, freq) in &words {
            for w in pieces.windows(2) {
                *pairs.entry((w[0], w[1])).or_default() += freq;
            }
        }
        let Some((&(a, b), _)) = pairs.iter().max_by(|(pa, ca), (pb, cb)| {
            ca.cmp(cb).then_with(|| {
                let ka = (&symbols[pa.0 as usize], &symbols[pa.1 as usize]);
                let kb = (&symbols[pb.0 as usize], &symbols[pb.1 as usize]);
                kb.cmp(&ka)
            })
        }) else {
            break;
        };
        let right = &symbols[b as usize];
        let merged = format!(
            "{}{}",
            symbols[a as usize],
            right.strip_prefix(CONTINUATION).unwrap_or(right)
        );
        let m = intern(merged.clone(), &mut symbols);
        if in_vocab.insert(merged.clone()) {
            tokens.push(merged);
        }
        for (pieces, _) in &mut words {
            let mut k = 0;
            let mut out = Vec::with_capacity(pieces.len());
            while k < pieces.len() {
                if k + 1 < pieces.len() && pieces[k] == a && pieces[k + 1] == b {
                    out.push(m);
                    k += 2;
                } else {
                    out.push(pieces[k]);
                    k += 1;
                }
            }
            *pieces = out;
        }
    }
    Vocab::from_tokens(tokens)
}
