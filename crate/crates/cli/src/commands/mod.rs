mod attention;
mod crossdomain;
mod data;
mod eval;
mod geoparse;
mod train;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use metores_core::model::read_checkpoint;
use metores_core::{ModelParams, Variant, Vocab};

use crate::error::{invalid, CliError};
use crate::Command;

pub fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Stats { inputs, source_format, out, format } => data::stats(&inputs, source_format.as_deref(), out.as_deref(), format),
        Command::Convert {
            input,
            source_format,
            output,
            gwn_associative_as_metonymic,
        } => data::convert(&input, &source_format, &output, gwn_associative_as_metonymic),
        Command::Synth { kind, seed, out } => data::synth(&kind, seed, &out),
        Command::Train {
            manifest,
            seeds,
            variant,
            ensemble,
            jobs,
            output,
        } => train::run(&manifest, seeds.as_deref(), variant.map(Into::into), ensemble, jobs, &output),
        Command::Eval {
            manifest,
            run,
            checkpoints,
            test,
            source_format,
            vocab,
            dataset,
            ensemble,
            output,
        } => eval::run(eval::EvalRequest {
            manifest,
            run,
            checkpoints,
            test,
            source_format,
            vocab,
            dataset,
            ensemble,
            output,
        }),
        Command::Crossdomain {
            manifests,
            pairs,
            variants,
            seeds,
            include_diagonal,
            output,
        } => crossdomain::run(&manifests, &pairs, &variants.into_iter().map(Into::into).collect::<Vec<_>>(), seeds.as_deref(), include_diagonal, &output),
        Command::Geoparse {
            manifest,
            docs,
            gazetteer,
            checkpoint,
            vocab,
            folds,
            output,
        } => geoparse::run(manifest, docs, gazetteer, checkpoint, vocab, folds, &output),
        Command::Attention {
            checkpoint,
            data,
            source_format,
            vocab,
            merge_below,
            output,
        } => attention::run(&checkpoint, &data, source_format.as_deref(), vocab.as_deref(), merge_below, &output),
    }
}

pub(crate) const VOCAB_FILE: &str = "vocab.txt";
pub(crate) const CHECKPOINT_FILE: &str = "model.ckpt";

/// A checkpoint with the vocabulary and settings it was trained with.
pub(crate) struct LoadedModel {
    pub params: ModelParams,
    pub vocab: Vocab,
    pub variant: Variant,
    pub max_seq_len: usize,
}

pub(crate) fn seed_dir(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("seed-{seed}"))
}

pub(crate) fn checkpoint_metadata(
    name: &str,
    seed: u64,
    variant: Variant,
    max_seq_len: usize,
    vocab: &Vocab,
) -> BTreeMap<String, String> {
    BTreeMap::from([
        ("experiment".to_string(), name.to_string()),
        ("seed".to_string(), seed.to_string()),
        ("variant".to_string(), variant.to_string()),
        ("max_seq_len".to_string(), max_seq_len.to_string()),
        ("vocab_fingerprint".to_string(), vocab.fingerprint()),
    ])
}

/// Loads a checkpoint and its vocabulary: `vocab` when given, otherwise
/// `vocab.txt` beside the checkpoint or one directory up.
pub(crate) fn load_model(checkpoint: &Path, vocab: Option<&Path>) -> Result<LoadedModel, CliError> {
    if !checkpoint.is_file() {
        return Err(invalid(format!("checkpoint {} does not exist", checkpoint.display())));
    }
    let ckpt = read_checkpoint(checkpoint)?;
    let vocab_path = match vocab {
        Some(p) => p.to_path_buf(),
        None => checkpoint
            .ancestors()
            .skip(1)
            .take(2)
            .map(|d| d.join(VOCAB_FILE))
            .find(|p| p.is_file())
            .ok_or_else(|| invalid(format!("no {VOCAB_FILE} found near {}; pass --vocab", checkpoint.display())))?,
    };
    if !vocab_path.is_file() {
        return Err(invalid(format!("vocabulary {} does not exist", vocab_path.display())));
    }
    let vocab = Vocab::load(&vocab_path)?;
    let meta = |key: &str| {
        ckpt.metadata
            .get(key)
            .ok_or_else(|| invalid(format!("checkpoint {} lacks {key}", checkpoint.display())))
    };
    if *meta("vocab_fingerprint")? != vocab.fingerprint() || vocab.len() != ckpt.params.config.vocab_size {
        return Err(invalid(format!(
            "vocabulary {} does not match checkpoint {}",
            vocab_path.display(),
            checkpoint.display()
        )));
    }
    let variant = Variant::parse(meta("variant")?).ok_or_else(|| invalid("checkpoint has an unknown variant"))?;
    let max_seq_len = meta("max_seq_len")?
        .parse()
        .map_err(|_| invalid("checkpoint has a bad max_seq_len"))?;
    Ok(LoadedModel {
        params: ckpt.params,
        vocab,
        variant,
        max_seq_len,
    })
}
