//! Flat `key = value` experiment manifests.
//!
//! Blank lines and lines starting with `#` are ignored. Relative paths are
//! resolved against the manifest's directory. Keys are applied in a fixed
//! order (presets first), so their order in the file does not matter.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use metores_core::corpus::{SourceFormat, SplitKind, SplitSpec};
use metores_core::model::ModelConfig;
use metores_core::trainer::{TrainConfig, Variant};

use crate::error::{invalid, CliError};

/// Raw entries of one manifest file, with the line each came from.
#[derive(Debug, Clone)]
pub struct RawManifest {
    pub path: PathBuf,
    pub dir: PathBuf,
    entries: BTreeMap<String, (usize, String)>,
}

impl RawManifest {
    pub fn parse(path: &Path, text: &str) -> Result<RawManifest, CliError> {
        let err = |line: usize, message: String| CliError::Manifest {
            path: path.display().to_string(),
            line,
            message,
        };
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(i + 1, format!("expected key = value, got {line:?}")))?;
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if k.is_empty() {
                return Err(err(i + 1, "empty key".into()));
            }
            if let Some((first, _)) = entries.insert(k.clone(), (i + 1, v)) {
                return Err(err(i + 1, format!("duplicate key {k:?} (first on line {first})")));
            }
        }
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(RawManifest {
            path: path.to_path_buf(),
            dir,
            entries,
        })
    }

    pub fn load(path: &Path) -> Result<RawManifest, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read manifest {}: {e}", path.display())))?;
        RawManifest::parse(path, &text)
    }

    fn err(&self, key: &str, message: String) -> CliError {
        CliError::Manifest {
            path: self.path.display().to_string(),
            line: self.entries.get(key).map_or(0, |(l, _)| *l),
            message,
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    pub fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.get(key)
            .map(|v| v.parse().map_err(|_| self.err(key, format!("{key}: cannot parse {v:?}"))))
            .transpose()
    }

    /// A path value resolved against the manifest directory; it must exist.
    pub fn path(&self, key: &str) -> Result<Option<PathBuf>, CliError> {
        let Some(v) = self.get(key) else { return Ok(None) };
        let p = self.dir.join(v);
        if !p.exists() {
            return Err(self.err(key, format!("{key}: {} does not exist", p.display())));
        }
        Ok(Some(p))
    }

    /// A path value resolved against the manifest directory, not required to
    /// exist (outputs).
    pub fn output_path(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(|v| self.dir.join(v))
    }

    pub fn reject_unknown(&self, known: &[&str]) -> Result<(), CliError> {
        match self.entries.keys().find(|k| !known.contains(&k.as_str())) {
            Some(k) => Err(self.err(k, format!("unknown key {k:?}"))),
            None => Ok(()),
        }
    }
}

/// Parses `1,2,5-7` into a seed list.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    let mut seeds = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let num = |x: &str| x.trim().parse::<u64>().map_err(|_| format!("bad seed {x:?}"));
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b)?);
                if a > b {
                    return Err(format!("empty seed range {part:?}"));
                }
                seeds.extend(a..=b);
            }
            None => seeds.push(num(part)?),
        }
    }
    if seeds.is_empty() {
        return Err("no seeds given".into());
    }
    let mut sorted = seeds.clone();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(format!("seed {} listed twice", w[0]));
    }
    Ok(seeds)
}

/// Template corpora that need no files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticKind {
    Separable,
    LexicalBias,
    SkewedNames,
}

impl SyntheticKind {
    pub fn parse(s: &str) -> Option<SyntheticKind> {
        match s {
            "separable" => Some(SyntheticKind::Separable),
            "lexical_bias" | "lexical-bias" => Some(SyntheticKind::LexicalBias),
            "skewed_names" | "skewed-names" => Some(SyntheticKind::SkewedNames),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SyntheticKind::Separable => "separable",
            SyntheticKind::LexicalBias => "lexical_bias",
            SyntheticKind::SkewedNames => "skewed_names",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    /// Separate files; a missing dev set is carved from train with
    /// `dev_split`.
    Files {
        train: PathBuf,
        dev: Option<PathBuf>,
        test: Option<PathBuf>,
        dev_split: Option<SplitSpec>,
    },
    /// One file partitioned into train/dev(/test).
    Split { data: PathBuf, spec: SplitSpec },
    Synthetic { kind: SyntheticKind, seed: u64 },
}

/// A validated training experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentManifest {
    pub path: PathBuf,
    pub name: String,
    /// Dataset key used to look up published reference figures.
    pub reference: Option<String>,
    pub data: DataSource,
    pub source_format: Option<SourceFormat>,
    pub gwn_associative_as_metonymic: bool,
    pub vocab_size: usize,
    /// Model shape; `vocab_size` is filled in once the vocabulary is built.
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub seeds: Vec<u64>,
    pub out: Option<PathBuf>,
}

const EXPERIMENT_KEYS: &[&str] = &[
    "name",
    "reference",
    "train",
    "dev",
    "test",
    "dev_split",
    "data",
    "split",
    "split_seed",
    "synthetic",
    "synthetic_seed",
    "source_format",
    "gwn_associative_as_metonymic",
    "vocab_size",
    "model",
    "hidden",
    "layers",
    "heads",
    "ffn",
    "max_positions",
    "preset",
    "learning_rate",
    "batch_size",
    "epochs",
    "max_seq_len",
    "dropout",
    "variant",
    "augment_copies",
    "augment_same_dataset",
    "seeds",
    "out",
];

impl ExperimentManifest {
    pub fn load(path: &Path) -> Result<ExperimentManifest, CliError> {
        ExperimentManifest::from_raw(&RawManifest::load(path)?)
    }

    pub fn from_raw(raw: &RawManifest) -> Result<ExperimentManifest, CliError> {
        raw.reject_unknown(EXPERIMENT_KEYS)?;
        let name = match raw.get("name") {
            Some(n) => n.to_string(),
            None => raw
                .path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "experiment".into()),
        };
        if name.is_empty() || name.contains(['/', '\\']) {
            return Err(raw.err("name", format!("name {name:?} is not a plain file name")));
        }
        let split_seed = raw.parsed::<u64>("split_seed")?.unwrap_or(1);
        let split_spec = |key: &str| -> Result<Option<SplitSpec>, CliError> {
            raw.get(key)
                .map(|s| SplitSpec::parse(s, split_seed).map_err(|e| raw.err(key, format!("{key}: {e}"))))
                .transpose()
        };


        let source_format = raw
            .get("source_format")
            .map(|f| SourceFormat::parse(f).ok_or_else(|| raw.err("source_format", format!("unknown source format {f:?}"))))
            .transpose()?;

        let mut model = match raw.get("model").unwrap_or("desk") {
            "desk" => ModelConfig::desk(0),
            "tiny" => ModelConfig::tiny(0),
            other => return Err(raw.err("model", format!("unknown model size {other:?} (desk, tiny)"))),
        };
        if let Some(v) = raw.parsed("hidden")? {
            model.hidden = v;
        }
        if let Some(v) = raw.parsed("layers")? {
            model.layers = v;
        }
        if let Some(v) = raw.parsed("heads")? {
            model.heads = v;
        }
        if let Some(v) = raw.parsed("ffn")? {
            model.ffn = v;
        }
        if let Some(v) = raw.parsed("max_positions")? {
            model.max_positions = v;
        }

        let mut train = match raw.get("preset").unwrap_or("desk") {
            "default" => TrainConfig::default(),
            "desk" => TrainConfig::desk(),
            "large" | "large_corpus" => TrainConfig::large_corpus(),
            other => return Err(raw.err("preset", format!("unknown preset {other:?} (default, desk, large)"))),
        };
        if let Some(v) = raw.parsed("learning_rate")? {
            train.learning_rate = v;
        }
        if let Some(v) = raw.parsed("batch_size")? {
            train.batch_size = v;
        }
        if let Some(v) = raw.parsed("epochs")? {
            train.epochs = v;
        }
        if let Some(v) = raw.parsed("max_seq_len")? {
            train.max_seq_len = v;
        }
        if let Some(v) = raw.parsed("dropout")? {
            train.dropout = v;
        }
        if let Some(v) = raw.parsed("augment_copies")? {
            train.augment_copies = v;
        }
        if let Some(v) = raw.parsed("augment_same_dataset")? {
            train.augment_same_dataset = v;
        }
        if let Some(v) = raw.get("variant") {
            train.variant = Variant::parse(v).ok_or_else(|| raw.err("variant", format!("unknown variant {v:?} (plain, aug, mask)")))?;
        }
        train.validate().map_err(|e| raw.err("", e.to_string()))?;
        let probe = ModelConfig { vocab_size: 1, ..model.clone() };
        probe.validate().map_err(|e| raw.err("", e.to_string()))?;

        let seeds = match raw.get("seeds") {
            Some(s) => parse_seeds(s).map_err(|e| raw.err("seeds", e))?,
            None => vec![train.seed],
        };
        // Paths last, so a manifest for absent data still reports other
        // mistakes first.
        let sources = ["train", "data", "synthetic"].iter().filter(|k| raw.get(k).is_some()).count();
        if sources != 1 {
            return Err(raw.err("", "exactly one of train, data or synthetic must be given".into()));
        }
        let data = if let Some(kind) = raw.get("synthetic") {
            let kind = SyntheticKind::parse(kind)
                .ok_or_else(|| raw.err("synthetic", format!("unknown synthetic corpus {kind:?}")))?;
            DataSource::Synthetic {
                kind,
                seed: raw.parsed("synthetic_seed")?.unwrap_or(1),
            }
        } else if raw.get("data").is_some() {
            let spec = split_spec("split")?.ok_or_else(|| raw.err("data", "data needs a split".into()))?;
            match &spec.kind {
                SplitKind::Fixed { fractions } | SplitKind::Lexical { fractions } if fractions.len() <= 3 => {}
                _ => return Err(raw.err("split", "split must give two or three fractions (train, dev[, test])".into())),
            }
            DataSource::Split {
                data: raw.path("data")?.unwrap(),
                spec,
            }
        } else {
            let dev = raw.path("dev")?;
            let dev_split = split_spec("dev_split")?;
            if dev.is_none() == dev_split.is_none() {
                return Err(raw.err("dev", "give exactly one of dev or dev_split".into()));
            }
            if let Some(s) = &dev_split {
                if s.parts() != 2 || matches!(s.kind, SplitKind::KFold { .. }) {
                    return Err(raw.err("dev_split", "dev_split must give two fractions (train, dev)".into()));
                }
            }
            DataSource::Files {
                train: raw.path("train")?.unwrap(),
                dev,
                test: raw.path("test")?,
                dev_split,
            }
        };
        if !matches!(data, DataSource::Files { .. }) {
            for key in ["dev", "test", "dev_split"] {
                if raw.get(key).is_some() {
                    return Err(raw.err(key, format!("{key} is only valid together with train")));
                }
            }
        }
        Ok(ExperimentManifest {
            path: raw.path.clone(),
            name,
            reference: raw.get("reference").map(str::to_string),
            data,
            source_format,
            gwn_associative_as_metonymic: raw.parsed("gwn_associative_as_metonymic")?.unwrap_or(false),
            vocab_size: raw.parsed("vocab_size")?.unwrap_or(2000),
            model,
            train,
            seeds,
            out: raw.output_path("out"),
        })
    }

    /// Name used for reports and published-figure lookups.
    pub fn dataset_label(&self) -> &str {
        self.reference.as_deref().unwrap_or(&self.name)
    }

    /// Resolved settings, one `key=value` per line in a fixed order.
    pub fn describe(&self) -> String {
        let t = &self.train;
        let m = &self.model;
        let data = match &self.data {
            DataSource::Files { train, dev, test, dev_split } => format!(
                "train={}\ndev={}\ntest={}\ndev_split={}\n",
                train.display(),
                dev.as_ref().map_or(String::new(), |p| p.display().to_string()),
                test.as_ref().map_or(String::new(), |p| p.display().to_string()),
                dev_split.as_ref().map_or(String::new(), |s| format!("{:?}", s)),
            ),
            DataSource::Split { data, spec } => format!("data={}\nsplit={:?}\n", data.display(), spec),
            DataSource::Synthetic { kind, seed } => format!("synthetic={}\nsynthetic_seed={seed}\n", kind.as_str()),
        };
        format!(
            "name={}\nreference={}\n{data}vocab_size={}\nhidden={}\nlayers={}\nheads={}\nffn={}\nmax_positions={}\n\
             learning_rate={}\nbatch_size={}\nepochs={}\nmax_seq_len={}\ndropout={}\nvariant={}\naugment_copies={}\n\
             augment_same_dataset={}\nseeds={}\n",
            self.name,
            self.reference.as_deref().unwrap_or(""),
            self.vocab_size,
            m.hidden,
            m.layers,
            m.heads,
            m.ffn,
            m.max_positions,
            t.learning_rate,
            t.batch_size,
            t.epochs,
            t.max_seq_len,
            t.dropout,
            t.variant,
            t.augment_copies,
            t.augment_same_dataset,
            self.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(","),
        )
    }
}

/// A geoparsing run: documents, gazetteer and a trained checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct GeoparseManifest {
    pub name: String,
    pub docs: PathBuf,
    pub gazetteer: PathBuf,
    pub checkpoint: PathBuf,
    pub vocab: Option<PathBuf>,
    pub folds: usize,
    pub out: Option<PathBuf>,
}

impl GeoparseManifest {
    pub fn load(path: &Path) -> Result<GeoparseManifest, CliError> {
        let raw = RawManifest::load(path)?;
        raw.reject_unknown(&["name", "docs", "gazetteer", "checkpoint", "vocab", "folds", "out"])?;
        let required = |key: &str| raw.path(key)?.ok_or_else(|| raw.err(key, format!("{key} is required")));
        let folds = raw.parsed("folds")?.unwrap_or(1);
        if folds == 0 {
            return Err(raw.err("folds", "folds must be at least 1".into()));
        }
        Ok(GeoparseManifest {
            name: raw.get("name").unwrap_or("geoparse").to_string(),
            docs: required("docs")?,
            gazetteer: required("gazetteer")?,
            checkpoint: required("checkpoint")?,
            vocab: raw.path("vocab")?,
            folds,
            out: raw.output_path("out"),
        })
    }
}
