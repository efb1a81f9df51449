use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::{DetectedSpan, EntityKind, PipelineError, SpanDetector};
use crate::text;

/// Case-folded place and organization names, stored as word sequences so
/// matching ignores spacing differences.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gazetteer {
    entries: BTreeMap<Vec<String>, EntityKind>,
    max_words: usize,
}

fn normalize(entry: &str) -> Vec<String> {
    let folded = text::fold(entry);
    let chars: Vec<char> = folded.chars().collect();
    text::word_ranges(&chars)
        .into_iter()
        .map(|r| chars[r].iter().collect())
        .collect()
}

impl Gazetteer {
    pub fn new() -> Gazetteer {
        Gazetteer::default()
    }

    pub fn from_entries<'a>(entries: impl IntoIterator<Item = &'a str>) -> Gazetteer {
        let mut g = Gazetteer::new();
        for e in entries {
            g.insert(e, EntityKind::Location);
        }
        g
    }

    /// Adds an entry; a later insert of the same words replaces the kind.
    pub fn insert(&mut self, entry: &str, kind: EntityKind) {
        let words = normalize(entry);
        if words.is_empty() {
            return;
        }
        self.max_words = self.max_words.max(words.len());
        self.entries.insert(words, kind);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn lookup(&self, words: &[String]) -> Option<EntityKind> {
        self.entries.get(words).copied()
    }

    /// Reads one entry per line, optionally followed by a tab and `LOC` or
    /// `ORG` (default `LOC`). Blank lines and lines starting with `#` are
    /// skipped.
    pub fn read<R: BufRead>(reader: R) -> Result<Gazetteer, PipelineError> {
        let mut g = Gazetteer::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (entry, kind) = match line.split_once('\t') {
                Some((e, k)) => {
                    let kind = EntityKind::parse(k.trim()).ok_or_else(|| PipelineError::Gazetteer {
                        line: i + 1,
                        message: format!("unknown kind {:?}", k.trim()),
                    })?;
                    (e.trim(), kind)
                }
                None => (line, EntityKind::Location),
            };
            g.insert(entry, kind);
        }
        Ok(g)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Gazetteer, PipelineError> {
        Gazetteer::read(BufReader::new(File::open(path)?))
    }
}

/// Dictionary detector: every word sequence listed in the gazetteer whose
/// first character is uppercase (when `require_capital` is set).
#[derive(Debug, Clone, PartialEq)]
pub struct GazetteerDetector {
    pub gazetteer: Gazetteer,
    pub require_capital: bool,
}

impl GazetteerDetector {
    pub fn new(gazetteer: Gazetteer) -> GazetteerDetector {
        GazetteerDetector {
            gazetteer,
            require_capital: true,
        }
    }
}

impl SpanDetector for GazetteerDetector {
    /// Returns all candidate matches, overlapping ones included.
    fn candidates(&self, doc_id: &str, doc: &str) -> Vec<DetectedSpan> {
        let chars: Vec<char> = doc.chars().collect();
        let words = text::word_ranges(&chars);
        let folded: Vec<String> = words
            .iter()
            .map(|r| chars[r.clone()].iter().map(|&c| text::fold_char(c)).collect())
            .collect();
        let mut out = Vec::new();
        for i in 0..words.len() {
            if self.require_capital && !chars[words[i].start].is_uppercase() {
                continue;
            }
            for len in 1..=self.gazetteer.max_words.min(words.len() - i) {
                if let Some(kind) = self.gazetteer.lookup(&folded[i..i + len]) {
                    let (start, end) = (words[i].start, words[i + len - 1].end);
                    out.push(DetectedSpan {
                        doc_id: doc_id.to_string(),
                        start,
                        end,
                        surface: chars[start..end].iter().collect(),
                        kind,
                        score: 1.0,
                    });
                }
            }
        }
        out
    }
}
