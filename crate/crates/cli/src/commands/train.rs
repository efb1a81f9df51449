use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use metores_core::eval::{accuracy, export_curves, summarize, write_accuracy_csv, write_accuracy_table, AccuracyRow};
use metores_core::model::write_checkpoint;
use metores_core::tokenizer::build_vocab;
use metores_core::trainer::{ensemble_predict, train_and_test, write_predictions_csv};
use metores_core::{ModelConfig, RunResult, Variant};

use super::data::load_splits;
use super::{checkpoint_metadata, seed_dir, CHECKPOINT_FILE, VOCAB_FILE};
use crate::error::{invalid, CliError};
use crate::manifest::{parse_seeds, ExperimentManifest};
use crate::output::{log, resolve_out, write_file};
use crate::{Format, OutputArgs};

pub(crate) fn run(
    manifest: &Path,
    seeds: Option<&str>,
    variant: Option<Variant>,
    ensemble: bool,
    jobs: Option<usize>,
    output: &OutputArgs,
) -> Result<(), CliError> {
    let mut m = ExperimentManifest::load(manifest)?;
    if let Some(s) = seeds {
        m.seeds = parse_seeds(s).map_err(invalid)?;
    }
    if let Some(v) = variant {
        m.train.variant = v;
    }
    if ensemble && m.seeds.len() < 2 {
        return Err(invalid("--ensemble needs at least two seeds"));
    }
    let out = resolve_out(output.out.as_deref(), m.out.as_deref(), &m.name);
    let splits = load_splits(&m)?;
    let vocab = build_vocab(&splits.train, m.vocab_size)?;
    let model = ModelConfig {
        vocab_size: vocab.len(),
        ..m.model.clone()
    };
    std::fs::create_dir_all(&out)?;
    log(&out, &format!("train {} seeds={:?} variant={}", m.name, m.seeds, m.train.variant))?;
    write_file(&out.join("manifest.txt"), m.describe().as_bytes())?;
    vocab.save(out.join(VOCAB_FILE))?;

    let eval_set = splits.eval_set();
    let jobs = jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, usize::from))
        .clamp(1, m.seeds.len());
    let next = AtomicUsize::new(0);
    let outcomes: Mutex<Vec<Option<Result<RunResult, String>>>> = Mutex::new(vec![None; m.seeds.len()]);
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(&seed) = m.seeds.get(i) else { break };
                let config = m.train.clone().with_seed(seed);
                let outcome = train_and_test(&config, &splits.train, &splits.dev, eval_set, &vocab, &model)
                    .map_err(CliError::from)
                    .and_then(|(params, result)| {
                        let dir = seed_dir(&out, seed);
                        result.save(&dir)?;
                        let meta = checkpoint_metadata(&m.name, seed, config.variant, config.max_seq_len, &vocab);
                        write_checkpoint(dir.join(CHECKPOINT_FILE), &params, &meta)?;
                        Ok(result)
                    })
                    .map_err(|e| e.to_string());
                outcomes.lock().unwrap()[i] = Some(outcome);
            });
        }
    });
    let outcomes: Vec<(u64, Result<RunResult, String>)> = m
        .seeds
        .iter()
        .copied()
        .zip(outcomes.into_inner().unwrap().into_iter().map(|o| o.expect("every seed ran")))
        .collect();

    let mut runs = csv::Writer::from_writer(Vec::new());
    runs.write_record(["seed", "status", "best_epoch", "best_dev_accuracy", "final_dev_accuracy", "accuracy", "error"])?;
    for (seed, o) in &outcomes {
        match o {
            Ok(r) => runs.write_record([
                seed.to_string(),
                "ok".into(),
                r.best_epoch.to_string(),
                r.best_dev_accuracy.to_string(),
                r.final_dev_accuracy.to_string(),
                r.accuracy.to_string(),
                String::new(),
            ])?,
            Err(e) => {
                eprintln!("seed {seed} failed: {e}");
                log(&out, &format!("seed {seed} failed: {e}"))?;
                runs.write_record([seed.to_string(), "failed".into(), String::new(), String::new(), String::new(), String::new(), e.clone()])?;
            }
        }
    }
    write_file(&out.join("runs.csv"), &runs.into_inner().map_err(|e| e.into_error())?)?;

    let ok: Vec<RunResult> = outcomes.iter().filter_map(|(_, o)| o.as_ref().ok().cloned()).collect();
    let failed = outcomes.len() - ok.len();
    if !ok.is_empty() {
        let mut curves = Vec::new();
        export_curves(&mut curves, &ok)?;
        write_file(&out.join("curves.csv"), &curves)?;

        let ensemble_accuracy = if ensemble && ok.len() >= 2 {
            let preds = ensemble_predict(&ok.iter().map(|r| r.predictions.clone()).collect::<Vec<_>>())?;
            let mut buf = Vec::new();
            write_predictions_csv(&mut buf, &preds)?;
            write_file(&out.join("ensemble_predictions.csv"), &buf)?;
            Some(accuracy(&preds, eval_set)?)
        } else {
            None
        };
        let row = AccuracyRow {
            dataset: m.dataset_label().to_string(),
            variant: m.train.variant,
            summary: summarize(&ok.iter().map(|r| r.accuracy).collect::<Vec<_>>())?,
            ensemble: ensemble_accuracy,
        };
        let rows = [row];
        let mut summary = Vec::new();
        match output.format {
            Format::Csv => write_accuracy_csv(&mut summary, &rows)?,
            Format::Txt => write_accuracy_table(&mut summary, &rows)?,
        }
        write_file(&out.join(format!("summary.{}", output.format.extension())), &summary)?;
        let mut table = Vec::new();
        write_accuracy_table(&mut table, &rows)?;
        print!("{}", String::from_utf8_lossy(&table));
    }
    log(&out, &format!("done, {failed} failed"))?;
    if failed > 0 {
        return Err(CliError::PartialFailure {
            failed,
            total: outcomes.len(),
        });
    }
    Ok(())
}
