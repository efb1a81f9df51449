use std::path::PathBuf;

use metores_core::eval::{accuracy, summarize, write_accuracy_csv, write_accuracy_table, AccuracyRow};
use metores_core::trainer::{ensemble_predict, predict, write_predictions_csv};

use super::data::{load_samples, load_splits, parse_format};
use super::{load_model, seed_dir, CHECKPOINT_FILE};
use crate::error::{invalid, CliError};
use crate::manifest::ExperimentManifest;
use crate::output::{resolve_out, write_file};
use crate::{Format, OutputArgs};

pub(crate) struct EvalRequest {
    pub manifest: Option<PathBuf>,
    pub run: Option<PathBuf>,
    pub checkpoints: Vec<PathBuf>,
    pub test: Option<PathBuf>,
    pub source_format: Option<String>,
    pub vocab: Option<PathBuf>,
    pub dataset: Option<String>,
    pub ensemble: bool,
    pub output: OutputArgs,
}

pub(crate) fn run(req: EvalRequest) -> Result<(), CliError> {
    let (samples, checkpoints, dataset, out) = match &req.manifest {
        Some(path) => {
            let m = ExperimentManifest::load(path)?;
            let splits = load_splits(&m)?;
            let run_dir = resolve_out(req.run.as_deref(), m.out.as_deref(), &m.name);
            let checkpoints = if req.checkpoints.is_empty() {
                m.seeds.iter().map(|&s| seed_dir(&run_dir, s).join(CHECKPOINT_FILE)).collect()
            } else {
                req.checkpoints.clone()
            };
            let out = req.output.out.clone().unwrap_or_else(|| run_dir.join("eval"));
            let dataset = req.dataset.clone().unwrap_or_else(|| m.dataset_label().to_string());
            (splits.eval_set().to_vec(), checkpoints, dataset, Some(out))
        }
        None => {
            let test = req.test.as_ref().ok_or_else(|| invalid("give --manifest or --test with --checkpoint"))?;
            let samples = load_samples(test, parse_format(req.source_format.as_deref())?, false)?;
            let dataset = req.dataset.clone().unwrap_or_else(|| {
                test.file_stem().map_or_else(|| "test".into(), |s| s.to_string_lossy().into_owned())
            });
            (samples, req.checkpoints.clone(), dataset, req.output.out.clone())
        }
    };
    if checkpoints.is_empty() {
        return Err(invalid("no checkpoints given"));
    }
    if samples.is_empty() {
        return Err(invalid("the evaluation set is empty"));
    }
    if req.ensemble && checkpoints.len() < 2 {
        return Err(invalid("--ensemble needs at least two checkpoints"));
    }

    let mut variant = None;
    let mut runs = csv::Writer::from_writer(Vec::new());
    runs.write_record(["checkpoint", "accuracy"])?;
    let mut accuracies = Vec::new();
    let mut members = Vec::new();
    for ckpt in &checkpoints {
        let model = load_model(ckpt, req.vocab.as_deref())?;
        if variant.is_some_and(|v| v != model.variant) {
            return Err(invalid("checkpoints were trained with different variants"));
        }
        variant = Some(model.variant);
        let preds = predict(&model.params, &model.vocab, &samples, model.variant, model.max_seq_len)?;
        let acc = accuracy(&preds, &samples)?;
        runs.write_record([ckpt.display().to_string(), acc.to_string()])?;
        accuracies.push(acc);
        members.push(preds);
    }
    let ensemble = if req.ensemble { Some(ensemble_predict(&members)?) } else { None };
    let row = AccuracyRow {
        dataset,
        variant: variant.expect("at least one checkpoint"),
        summary: summarize(&accuracies)?,
        ensemble: ensemble.as_ref().map(|p| accuracy(p, &samples)).transpose()?,
    };
    let rows = [row];
    let mut report = Vec::new();
    match req.output.format {
        Format::Csv => write_accuracy_csv(&mut report, &rows)?,
        Format::Txt => write_accuracy_table(&mut report, &rows)?,
    }
    match out {
        Some(dir) => {
            write_file(&dir.join(format!("eval.{}", req.output.format.extension())), &report)?;
            write_file(&dir.join("eval_runs.csv"), &runs.into_inner().map_err(|e| e.into_error())?)?;
            if let Some(preds) = &ensemble {
                let mut buf = Vec::new();
                write_predictions_csv(&mut buf, preds)?;
                write_file(&dir.join("ensemble_predictions.csv"), &buf)?;
            }
        }
        None => print!("{}", String::from_utf8_lossy(&report)),
    }
    Ok(())
}
