//! Converters from the source dataset distributions to canonical samples.
//!
//! The source distributions do not share a format, and their exact on-disk
//! layouts vary between releases. Each converter accepts one documented
//! layout and fails with the record index on anything else:
//!
//! - [`SourceFormat::SemEvalXml`]: `<sample id="..">` elements whose `<par>`
//!   children hold the text; the single target is wrapped in
//!   `<annot><location|org reading=".." metotype="..">surface</location|org></annot>`.
//!   Whitespace is collapsed to single spaces. `location` targets go to
//!   dataset `semeval_loc`, `org` targets to `semeval_org`.
//! - [`SourceFormat::RelocarTsv`]: `id<TAB>label<TAB>sentence`, the target
//!   wrapped in `<e>..</e>` inside the sentence. `#` lines are comments.
//! - [`SourceFormat::ConllCol`]: one `token<TAB>tag` per line, blank line
//!   between sentences, tags `O`, `B-LIT`/`I-LIT`, `B-MET`/`I-MET`. The
//!   sentence text is the tokens joined by single spaces; every `B-` tag
//!   starts one sample.
//! - [`SourceFormat::GwnJson`]: JSON lines
//!   `{"id":..,"text":..,"toponyms":[{"start":..,"end":..,"type":..}]}` with
//!   character offsets. Types `literal`, `metonymic` and `mixed` are kept
//!   (mixed counts as metonymic). The associative types `homonym`, `demonym`
//!   and `noun_modifier` are skipped unless
//!   [`ConvertOptions::gwn_associative_as_metonymic`] is set.
//! - [`SourceFormat::WimcorJson`]: JSON lines
//!   `{"id":..,"text":..,"start":..,"end":..,"label":..}`, streamed.
//!
//! JSON records may carry a `surface` field; when present it must equal the
//! text at the given offsets.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use serde::Deserialize;

use super::{CorpusError, Label, Sample};
use crate::text;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceFormat {
    SemEvalXml,
    RelocarTsv,
    ConllCol,
    GwnJson,
    WimcorJson,
}

impl SourceFormat {
    pub fn parse(s: &str) -> Option<SourceFormat> {
        match s {
            "semeval" | "semeval-xml" => Some(SourceFormat::SemEvalXml),
            "relocar" | "relocar-tsv" => Some(SourceFormat::RelocarTsv),
            "conll" | "conll-col" => Some(SourceFormat::ConllCol),
            "gwn" | "gwn-json" => Some(SourceFormat::GwnJson),
            "wimcor" | "wimcor-json" => Some(SourceFormat::WimcorJson),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ConvertOptions {
    /// Map every GWN associative reading (homonym, demonym, noun modifier)
    /// to [`Label::Metonymic`], as the geoparsing task needs.
    pub gwn_associative_as_metonymic: bool,
}

pub fn convert_dataset(raw: impl AsRef<Path>, format: SourceFormat) -> Result<Vec<Sample>, CorpusError> {
    convert_dataset_with(raw, format, &ConvertOptions::default())
}

pub fn convert_dataset_with(
    raw: impl AsRef<Path>,
    format: SourceFormat,
    options: &ConvertOptions,
) -> Result<Vec<Sample>, CorpusError> {
    let path = raw.as_ref();
    match format {
        SourceFormat::SemEvalXml => semeval_xml(&std::fs::read_to_string(path)?),
        SourceFormat::RelocarTsv => relocar_tsv(BufReader::new(File::open(path)?)),
        SourceFormat::ConllCol => conll_col(BufReader::new(File::open(path)?)),
        SourceFormat::GwnJson => gwn_json(BufReader::new(File::open(path)?), options),
        SourceFormat::WimcorJson => wimcor_stream(BufReader::new(File::open(path)?)).collect(),
    }
}

fn convert_err(index: usize, message: impl Into<String>) -> CorpusError {
    CorpusError::Convert {
        index,
        message: message.into(),
    }
}

/// Maps a source reading onto the binary task. `mixed` readings are merged
/// into the metonymic class.
fn coarse_label(index: usize, reading: &str) -> Result<Label, CorpusError> {
    match reading.to_ascii_lowercase().as_str() {
        "literal" | "lit" => Ok(Label::Literal),
        "metonymic" | "metonymy" | "met" | "mixed" | "mix" => Ok(Label::Metonymic),
        _ => Err(CorpusError::UnknownLabel {
            index,
            label: reading.to_string(),
        }),
    }
}

/// Accumulates text with collapsed whitespace while tracking a target span.
#[derive(Default)]
struct NormalizedText {
    out: String,
    chars: usize,
    pending_space: bool,
    awaiting_target: bool,
    start: Option<usize>,
    end: Option<usize>,
}

impl NormalizedText {
    fn push(&mut self, s: &str) {
        for c in s.chars() {
            if c.is_whitespace() {
                self.pending_space = self.chars > 0;
                continue;
            }
            if self.pending_space {
                self.out.push(' ');
                self.chars += 1;
                self.pending_space = false;
            }
            if self.awaiting_target {
                self.start = Some(self.chars);
                self.awaiting_target = false;
            }
            self.out.push(c);
            self.chars += 1;
        }
    }

    fn soft_break(&mut self) {
        self.pending_space = self.chars > 0;
    }

    fn open_target(&mut self) {
        self.awaiting_target = true;
    }

    fn close_target(&mut self) {
        self.awaiting_target = false;
        self.end = Some(self.chars);
    }
}

struct SemEvalTarget {
    tag: Vec<u8>,
    reading: String,
    metotype: Option<String>,
}

fn attr(e: &BytesStart<'_>, name: &str, index: usize) -> Result<Option<String>, CorpusError> {
    match e.try_get_attribute(name) {
        Ok(Some(a)) => a
            .unescape_value()
            .map(|v| Some(v.into_owned()))
            .map_err(|err| convert_err(index, err.to_string())),
        Ok(None) => Ok(None),
        Err(err) => Err(convert_err(index, err.to_string())),
    }
}

fn semeval_xml(xml: &str) -> Result<Vec<Sample>, CorpusError> {
    let mut reader = Reader::from_str(xml);
    let mut samples = Vec::new();
    let mut index = 0usize;
    let mut current: Option<(String, NormalizedText)> = None;
    let mut in_par = 0usize;
    let mut target: Option<SemEvalTarget> = None;
    let mut found: Option<SemEvalTarget> = None;

    loop {
        let event = reader
            .read_event()
            .map_err(|e| convert_err(index, format!("xml: {e}")))?;
        match event {
            Event::Start(e) => match e.name().as_ref() {
                b"sample" => {
                    let id = attr(&e, "id", index)?
                        .ok_or_else(|| convert_err(index, "sample without id"))?;
                    current = Some((id, NormalizedText::default()));
                    found = None;
                }
                b"par" => {
                    in_par += 1;
                    if let Some((_, t)) = current.as_mut() {
                        t.soft_break();
                    }
                }
                tag @ (b"location" | b"org") if in_par > 0 => {
                    let (_, t) = current
                        .as_mut()
                        .ok_or_else(|| convert_err(index, "target outside sample"))?;
                    if found.is_some() || target.is_some() {
                        return Err(convert_err(index, "more than one annotated target"));
                    }
                    let reading = attr(&e, "reading", index)?
                        .ok_or_else(|| convert_err(index, "target without reading"))?;
                    let metotype = attr(&e, "metotype", index)?.filter(|m| !m.is_empty());
                    target = Some(SemEvalTarget {
                        tag: tag.to_vec(),
                        reading,
                        metotype,
                    });
                    t.open_target();
                }
                _ => {}
            },
            Event::End(e) => match e.name().as_ref() {
                b"par" => {
                    in_par = in_par.saturating_sub(1);
                    if let Some((_, t)) = current.as_mut() {
                        t.soft_break();
                    }
                }
                tag if target.as_ref().is_some_and(|t| t.tag == tag) => {
                    if let Some((_, t)) = current.as_mut() {
                        t.close_target();
                    }
                    found = target.take();
                }
                b"sample" => {
                    let (id, t) = current
                        .take()
                        .ok_or_else(|| convert_err(index, "unbalanced </sample>"))?;
                    let tgt = found
                        .take()
                        .ok_or_else(|| convert_err(index, format!("sample {id} has no annotated target")))?;
                    let (start, end) = t
                        .start
                        .zip(t.end)
                        .ok_or_else(|| convert_err(index, format!("sample {id} has an empty target")))?;
                    let label = coarse_label(index, &tgt.reading)?;
                    let dataset = if tgt.tag == b"org" { "semeval_org" } else { "semeval_loc" };
                    let mut sample = Sample::new(id, t.out, start, end, label, dataset)?;
                    if tgt.reading == "mixed" {
                        sample.fine_label = Some("mixed".into());
                    } else if label == Label::Metonymic {
                        sample.fine_label = tgt.metotype;
                    }
                    samples.push(sample);
                    index += 1;
                }
                _ => {}
            },
            Event::Text(t) if in_par > 0 => {
                let s = t
                    .unescape()
                    .map_err(|e| convert_err(index, format!("xml text: {e}")))?;
                if let Some((_, buf)) = current.as_mut() {
                    buf.push(&s);
                }
            }
            Event::CData(t) if in_par > 0 => {
                let s = String::from_utf8_lossy(&t).into_owned();
                if let Some((_, buf)) = current.as_mut() {
                    buf.push(&s);
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }
    if current.is_some() {
        return Err(convert_err(index, "unterminated <sample>"));
    }
    Ok(samples)
}

fn relocar_tsv<R: BufRead>(reader: R) -> Result<Vec<Sample>, CorpusError> {
    let mut samples = Vec::new();
    let mut index = 0;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.splitn(3, '\t');
        let (Some(id), Some(label), Some(marked)) = (cols.next(), cols.next(), cols.next()) else {
            return Err(convert_err(index, "expected id<TAB>label<TAB>sentence"));
        };
        let label = coarse_label(index, label.trim())?;
        let open = marked
            .find("<e>")
            .ok_or_else(|| convert_err(index, "missing <e> marker"))?;
        let close = marked
            .find("</e>")
            .filter(|&c| c > open)
            .ok_or_else(|| convert_err(index, "missing </e> marker"))?;
        if marked[close + 4..].contains("<e>") {
            return Err(convert_err(index, "more than one marked target"));
        }
        let before = &marked[..open];
        let inner = &marked[open + 3..close];
        let after = &marked[close + 4..];
        let text = format!("{before}{inner}{after}");
        let start = text::char_len(before);
        let end = start + text::char_len(inner);
        samples.push(Sample::new(id.trim(), text, start, end, label, "relocar")?);
        index += 1;
    }
    Ok(samples)
}

fn conll_col<R: BufRead>(reader: R) -> Result<Vec<Sample>, CorpusError> {
    let mut samples = Vec::new();
    let mut sentence: Vec<(String, String)> = Vec::new();
    let mut sent_index = 0;

    let mut flush = |sentence: &mut Vec<(String, String)>, sent_index: &mut usize| -> Result<(), CorpusError> {
        if sentence.is_empty() {
            return Ok(());
        }
        let mut text = String::new();
        let mut offsets = Vec::with_capacity(sentence.len());
        for (k, (tok, _)) in sentence.iter().enumerate() {
            if k > 0 {
                text.push(' ');
            }
            let start = text::char_len(&text);
            text.push_str(tok);
            offsets.push((start, text::char_len(&text)));
        }
        let mut mention = 0;
        let mut k = 0;
        while k < sentence.len() {
            let tag = sentence[k].1.as_str();
            if tag == "O" {
                k += 1;
                continue;
            }
            let (prefix, kind) = tag
                .split_once('-')
                .ok_or_else(|| convert_err(*sent_index, format!("malformed tag {tag:?}")))?;
            if prefix != "B" {
                return Err(convert_err(*sent_index, format!("tag {tag:?} does not start a mention")));
            }
            let label = coarse_label(*sent_index, kind)?;
            let start = offsets[k].0;
            let mut last = k;
            while last + 1 < sentence.len() && sentence[last + 1].1 == format!("I-{kind}") {
                last += 1;
            }
            let end = offsets[last].1;
            let id = format!("conll-{}-{}", *sent_index, mention);
            samples.push(Sample::new(id, text.clone(), start, end, label, "conll")?);
            mention += 1;
            k = last + 1;
        }
        sentence.clear();
        *sent_index += 1;
        Ok(())
    };

    for line in reader.lines() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            flush(&mut sentence, &mut sent_index)?;
            continue;
        }
        if trimmed.starts_with("-DOCSTART-") {
            continue;
        }
        let mut cols = trimmed.split('\t');
        let (Some(tok), Some(tag)) = (cols.next(), cols.next()) else {
            return Err(convert_err(sent_index, format!("expected token<TAB>tag, got {trimmed:?}")));
        };
        sentence.push((tok.to_string(), tag.trim().to_string()));
    }
    flush(&mut sentence, &mut sent_index)?;
    Ok(samples)
}

#[derive(Deserialize)]
struct GwnDoc {
    id: String,
    text: String,
    toponyms: Vec<GwnToponym>,
}

#[derive(Deserialize)]
struct GwnToponym {
    start: usize,
    end: usize,
    #[serde(rename = "type")]
    kind: String,
    #[serde(default)]
    surface: Option<String>,
}

fn check_surface(index: usize, text: &str, start: usize, end: usize, surface: Option<&str>) -> Result<(), CorpusError> {
    if let Some(expected) = surface {
        let got = text::char_slice(text, start..end)
            .ok_or_else(|| convert_err(index, format!("span {start}..{end} out of range")))?;
        if got != expected {
            return Err(convert_err(
                index,
                format!("span {start}..{end} reads {got:?}, record says {expected:?}"),
            ));
        }
    }
    Ok(())
}

fn gwn_json<R: BufRead>(reader: R, options: &ConvertOptions) -> Result<Vec<Sample>, CorpusError> {
    let mut samples = Vec::new();
    let mut index = 0;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: GwnDoc = serde_json::from_str(&line).map_err(|e| convert_err(index, e.to_string()))?;
        for (k, t) in doc.toponyms.iter().enumerate() {
            check_surface(index, &doc.text, t.start, t.end, t.surface.as_deref())?;
            let kind = t.kind.to_ascii_lowercase();
            let (label, fine) = match kind.as_str() {
                "literal" => (Label::Literal, None),
                "metonymic" => (Label::Metonymic, None),
                "mixed" => (Label::Metonymic, Some("mixed")),
                "homonym" | "demonym" | "noun_modifier" => {
                    if !options.gwn_associative_as_metonymic {
                        continue;
                    }
                    (Label::Metonymic, Some(kind.as_str()))
                }
                _ => {
                    return Err(CorpusError::UnknownLabel {
                        index,
                        label: t.kind.clone(),
                    })
                }
            };
            let mut s = Sample::new(format!("{}-{k}", doc.id), doc.text.clone(), t.start, t.end, label, "gwn")?;
            s.fine_label = fine.map(str::to_string);
            samples.push(s);
        }
        index += 1;
    }
    Ok(samples)
}

#[derive(Deserialize)]
struct WimcorRecord {
    id: String,
    text: String,
    start: usize,
    end: usize,
    label: String,
    #[serde(default)]
    surface: Option<String>,
}

/// Streams WiMCor records without materializing the whole file.
pub fn wimcor_stream<R: BufRead>(reader: R) -> impl Iterator<Item = Result<Sample, CorpusError>> {
    reader
        .lines()
        .filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
        .enumerate()
        .map(|(index, line)| {
            let rec: WimcorRecord =
                serde_json::from_str(&line?).map_err(|e| convert_err(index, e.to_string()))?;
            check_surface(index, &rec.text, rec.start, rec.end, rec.surface.as_deref())?;
            let label = coarse_label(index, &rec.label)?;
            Sample::new(rec.id, rec.text, rec.start, rec.end, label, "wimcor")
        })
}
