use std::path::Path;

use metores_core::corpus::{
    compute_stats, convert_dataset_with, load_canonical, split, write_canonical, write_canonical_file, write_stats_csv,
    write_stats_table, ConvertOptions, SourceFormat,
};
use metores_core::synthetic::{lexical_bias_corpus, separable_corpus, skewed_names_corpus, LexicalBiasConfig, SkewedNamesConfig, SyntheticSplits};
use metores_core::Sample;

use crate::error::{invalid, CliError};
use crate::manifest::{DataSource, ExperimentManifest, SyntheticKind};
use crate::output::write_file;
use crate::Format;

pub(crate) fn parse_format(s: Option<&str>) -> Result<Option<SourceFormat>, CliError> {
    s.map(|f| SourceFormat::parse(f).ok_or_else(|| invalid(format!("unknown source format {f:?}"))))
        .transpose()
}

/// Reads a canonical file, or converts a raw one when `format` is given.
pub(crate) fn load_samples(path: &Path, format: Option<SourceFormat>, gwn_associative: bool) -> Result<Vec<Sample>, CliError> {
    if !path.exists() {
        return Err(invalid(format!("{} does not exist", path.display())));
    }
    Ok(match format {
        Some(f) => convert_dataset_with(
            path,
            f,
            &ConvertOptions {
                gwn_associative_as_metonymic: gwn_associative,
            },
        )?,
        None => load_canonical(path)?,
    })
}

pub(crate) struct Splits {
    pub train: Vec<Sample>,
    pub dev: Vec<Sample>,
    pub test: Option<Vec<Sample>>,
}

impl Splits {
    /// Test set when present, otherwise dev.
    pub fn eval_set(&self) -> &[Sample] {
        self.test.as_deref().unwrap_or(&self.dev)
    }
}

pub(crate) fn synthetic_splits(kind: SyntheticKind, seed: u64) -> SyntheticSplits {
    match kind {
        SyntheticKind::Separable => {
            let all = separable_corpus(400, seed);
            SyntheticSplits {
                train: all[..240].to_vec(),
                dev: all[240..320].to_vec(),
                test: all[320..].to_vec(),
            }
        }
        SyntheticKind::LexicalBias => lexical_bias_corpus(&LexicalBiasConfig::default(), seed),
        SyntheticKind::SkewedNames => skewed_names_corpus(&SkewedNamesConfig::default(), seed),
    }
}

pub(crate) fn load_splits(m: &ExperimentManifest) -> Result<Splits, CliError> {
    let load = |p: &Path| load_samples(p, m.source_format, m.gwn_associative_as_metonymic);
    let splits = match &m.data {
        DataSource::Synthetic { kind, seed } => {
            let s = synthetic_splits(*kind, *seed);
            Splits {
                train: s.train,
                dev: s.dev,
                test: Some(s.test),
            }
        }
        DataSource::Split { data, spec } => {
            let mut parts = split(&load(data)?, spec)?.into_iter();
            Splits {
                train: parts.next().unwrap_or_default(),
                dev: parts.next().unwrap_or_default(),
                test: parts.next(),
            }
        }
        DataSource::Files { train, dev, test, dev_split } => {
            let train = load(train)?;
            let test = test.as_deref().map(load).transpose()?;
            match (dev, dev_split) {
                (Some(dev), _) => Splits {
                    train,
                    dev: load(dev)?,
                    test,
                },
                (None, Some(spec)) => {
                    let mut parts = split(&train, spec)?.into_iter();
                    Splits {
                        train: parts.next().unwrap_or_default(),
                        dev: parts.next().unwrap_or_default(),
                        test,
                    }
                }
                (None, None) => unreachable!("manifest validation requires dev or dev_split"),
            }
        }
    };
    if splits.train.is_empty() || splits.dev.is_empty() {
        return Err(invalid(format!("{}: train and dev sets must be non-empty", m.path.display())));
    }
    Ok(splits)
}

pub(crate) fn stats(inputs: &[std::path::PathBuf], format: Option<&str>, out: Option<&Path>, fmt: Format) -> Result<(), CliError> {
    let format = parse_format(format)?;
    let mut rows = Vec::new();
    for p in inputs {
        let name = p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
        rows.push((name, compute_stats(&load_samples(p, format, false)?)));
    }
    let mut buf = Vec::new();
    match fmt {
        Format::Csv => write_stats_csv(&mut buf, &rows)?,
        Format::Txt => write_stats_table(&mut buf, &rows)?,
    }
    match out {
        Some(dir) => write_file(&dir.join(format!("stats.{}", fmt.extension())), &buf),
        None => {
            print!("{}", String::from_utf8_lossy(&buf));
            Ok(())
        }
    }
}

pub(crate) fn convert(input: &Path, format: &str, output: &Path, gwn_associative: bool) -> Result<(), CliError> {
    let format = parse_format(Some(format))?;
    let samples = load_samples(input, format, gwn_associative)?;
    let mut buf = Vec::new();
    write_canonical(&mut buf, &samples)?;
    write_file(output, &buf)?;
    println!("{} samples", samples.len());
    Ok(())
}

pub(crate) fn synth(kind: &str, seed: u64, out: &Path) -> Result<(), CliError> {
    let kind = SyntheticKind::parse(kind).ok_or_else(|| invalid(format!("unknown synthetic corpus {kind:?}")))?;
    let s = synthetic_splits(kind, seed);
    std::fs::create_dir_all(out)?;
    for (name, part) in [("train", &s.train), ("dev", &s.dev), ("test", &s.test)] {
        let path = out.join(format!("{name}.jsonl"));
        write_canonical_file(&path, part)?;
        println!("wrote {} ({} samples)", path.display(), part.len());
    }
    Ok(())
}
