use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;

use super::PipelineError;
use crate::eval::SpanRef;
use crate::text;

/// A raw document, optionally with gold toponym annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub text: String,
    /// Gold toponyms as (start, end, is_literal), when annotated.
    pub toponyms: Option<Vec<(usize, usize, bool)>>,
}

impl Document {
    /// Gold literal toponyms as spans, empty when unannotated.
    pub fn gold_literal(&self) -> Vec<SpanRef> {
        self.toponyms
            .iter()
            .flatten()
            .filter(|t| t.2)
            .map(|&(s, e, _)| SpanRef::new(self.id.clone(), s, e))
            .collect()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DocRecord {
    id: String,
    text: String,
    #[serde(default)]
    toponyms: Option<Vec<ToponymRecord>>,
}

#[derive(Deserialize)]
struct ToponymRecord {
    start: usize,
    end: usize,
    #[serde(rename = "type")]
    kind: String,
}

/// Reads documents from a directory of `.txt` files (id = file stem, sorted
/// by name) or from a JSON-lines file with `id`, `text` and optional
/// `toponyms` (`start`, `end`, `type`; type `literal` marks literal ones).
pub fn read_documents(path: impl AsRef<Path>) -> Result<Vec<Document>, PipelineError> {
    let path = path.as_ref();
    if path.is_dir() {
        let mut files: Vec<_> = fs::read_dir(path)?
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "txt"))
            .collect();
        files.sort();
        return files
            .into_iter()
            .map(|p| {
                Ok(Document {
                    id: p.file_stem().unwrap_or_default().to_string_lossy().into_owned(),
                    text: fs::read_to_string(&p)?,
                    toponyms: None,
                })
            })
            .collect();
    }
    let reader = BufReader::new(fs::File::open(path)?);
    let mut docs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |m: String| PipelineError::Documents(format!("line {}: {m}", i + 1));
        let rec: DocRecord = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        let len = text::char_len(&rec.text);
        let toponyms = match rec.toponyms {
            None => None,
            Some(ts) => Some(
                ts.into_iter()
                    .map(|t| {
                        if t.start >= t.end || t.end > len {
                            return Err(bad(format!("toponym {}..{} outside the text", t.start, t.end)));
                        }
                        Ok((t.start, t.end, t.kind.eq_ignore_ascii_case("literal")))
                    })
                    .collect::<Result<Vec<_>, _>>()?,
            ),
        };
        docs.push(Document {
            id: rec.id,
            text: rec.text,
            toponyms,
        });
    }
    Ok(docs)
}
