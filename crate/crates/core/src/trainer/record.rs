//! On-disk form of a run: `result.txt` (key=value summary), `curve.csv` and
//! `predictions.csv`. Reals are written in shortest round-trip form, so a
//! saved run reloads exactly.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::{CurvePoint, Prediction, RunResult, TrainError, Variant};
use crate::corpus::Label;

pub const CURVE_HEADER: [&str; 4] = ["step", "epoch", "train_loss", "dev_accuracy"];
pub const PREDICTIONS_HEADER: [&str; 5] = ["id", "label", "score", "p_literal", "p_metonymic"];

fn format_err(file: &str, message: impl Into<String>) -> TrainError {
    TrainError::Format {
        file: file.to_string(),
        message: message.into(),
    }
}

pub fn write_curve_csv<W: Write>(w: W, curve: &[CurvePoint]) -> Result<(), TrainError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CURVE_HEADER)?;
    for p in curve {
        out.write_record([
            p.step.to_string(),
            p.epoch.to_string(),
            p.train_loss.to_string(),
            p.dev_accuracy.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_predictions_csv<W: Write>(w: W, predictions: &[Prediction]) -> Result<(), TrainError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(PREDICTIONS_HEADER)?;
    for p in predictions {
        out.write_record([
            p.id.clone(),
            p.label.as_str().to_string(),
            p.score().to_string(),
            p.probs[0].to_string(),
            p.probs[1].to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

fn read_rows<R: Read>(r: R, file: &str, header: &[&str]) -> Result<Vec<csv::StringRecord>, TrainError> {
    let mut rdr = csv::Reader::from_reader(r);
    let found: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if found != header {
        return Err(format_err(file, format!("expected header {}", header.join(","))));
    }
    Ok(rdr.records().collect::<Result<Vec<_>, _>>()?)
}

fn field<T: std::str::FromStr>(row: &csv::StringRecord, i: usize, file: &str) -> Result<T, TrainError> {
    row.get(i)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| format_err(file, format!("bad value in column {} of {:?}", i + 1, row)))
}

pub fn read_curve_csv<R: Read>(r: R) -> Result<Vec<CurvePoint>, TrainError> {
    let file = "curve.csv";
    read_rows(r, file, &CURVE_HEADER)?
        .iter()
        .map(|row| {
            Ok(CurvePoint {
                step: field(row, 0, file)?,
                epoch: field(row, 1, file)?,
                train_loss: field(row, 2, file)?,
                dev_accuracy: field(row, 3, file)?,
            })
        })
        .collect()
}

pub fn read_predictions_csv<R: Read>(r: R) -> Result<Vec<Prediction>, TrainError> {
    let file = "predictions.csv";
    read_rows(r, file, &PREDICTIONS_HEADER)?
        .iter()
        .map(|row| {
            let label = Label::parse(&row[1]).ok_or_else(|| format_err(file, format!("unknown label {:?}", &row[1])))?;
            Ok(Prediction {
                id: row[0].to_string(),
                label,
                probs: [field(row, 3, file)?, field(row, 4, file)?],
            })
        })
        .collect()
}

impl RunResult {
    /// Writes the three record files into `dir`, creating it if needed.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<(), TrainError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let summary = format!(
            "seed={}\nvariant={}\nepochs={}\nbest_epoch={}\nbest_dev_accuracy={}\nfinal_dev_accuracy={}\naccuracy={}\npredictions={}\n",
            self.seed,
            self.variant,
            self.curve.len(),
            self.best_epoch,
            self.best_dev_accuracy,
            self.final_dev_accuracy,
            self.accuracy,
            self.predictions.len()
        );
        fs::write(dir.join("result.txt"), summary)?;
        write_curve_csv(fs::File::create(dir.join("curve.csv"))?, &self.curve)?;
        write_predictions_csv(fs::File::create(dir.join("predictions.csv"))?, &self.predictions)?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<RunResult, TrainError> {
        let dir = dir.as_ref();
        let file = "result.txt";
        let text = fs::read_to_string(dir.join(file))?;
        let mut kv = BTreeMap::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line.split_once('=').ok_or_else(|| format_err(file, format!("bad line {line:?}")))?;
            kv.insert(k.trim(), v.trim());
        }
        fn get<T: std::str::FromStr>(kv: &BTreeMap<&str, &str>, k: &str) -> Result<T, TrainError> {
            kv.get(k)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| format_err("result.txt", format!("missing or bad {k}")))
        }
        let variant_name: String = get(&kv, "variant")?;
        let variant = Variant::parse(&variant_name).ok_or_else(|| format_err(file, format!("unknown variant {variant_name:?}")))?;
        Ok(RunResult {
            seed: get(&kv, "seed")?,
            variant,
            curve: read_curve_csv(fs::File::open(dir.join("curve.csv"))?)?,
            best_epoch: get(&kv, "best_epoch")?,
            best_dev_accuracy: get(&kv, "best_dev_accuracy")?,
            final_dev_accuracy: get(&kv, "final_dev_accuracy")?,
            predictions: read_predictions_csv(fs::File::open(dir.join("predictions.csv"))?)?,
            accuracy: get(&kv, "accuracy")?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_result_round_trips() {
        let r = RunResult {
            seed: 7,
            variant: Variant::Masked,
            curve: vec![
                CurvePoint { step: 4, epoch: 1, train_loss: 0.1 + 0.2, dev_accuracy: 2.0 / 3.0 },
                CurvePoint { step: 8, epoch: 2, train_loss: 1e-17, dev_accuracy: 1.0 },
            ],
            best_epoch: 2,
            best_dev_accuracy: 1.0,
            final_dev_accuracy: 1.0,
            predictions: vec![Prediction { id: "a,b".into(), label: Label::Metonymic, probs: [0.25, 0.75] }],
            accuracy: 1.0,
        };
        let dir = tempfile::tempdir().unwrap();
        r.save(dir.path()).unwrap();
        assert_eq!(RunResult::load(dir.path()).unwrap(), r);
        let curve = fs::read_to_string(dir.path().join("curve.csv")).unwrap();
        assert!(curve.starts_with("step,epoch,train_loss,dev_accuracy\n4,1,0.30000000000000004,"));
    }

    #[test]
    fn wrong_header_is_rejected() {
        assert!(read_curve_csv("a,b\n1,2\n".as_bytes()).is_err());
    }
}
