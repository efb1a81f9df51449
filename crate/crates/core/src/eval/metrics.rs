use std::collections::{BTreeMap, BTreeSet};

use super::EvalError;
use crate::corpus::Sample;
use crate::trainer::Prediction;

/// Fraction of predictions matching the gold label. Predictions must follow
/// the gold order id by id.
pub fn accuracy(predictions: &[Prediction], gold: &[Sample]) -> Result<f64, EvalError> {
    if predictions.len() != gold.len() {
        return Err(EvalError::LengthMismatch {
            predicted: predictions.len(),
            gold: gold.len(),
        });
    }
    if gold.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut correct = 0usize;
    for (i, (p, g)) in predictions.iter().zip(gold).enumerate() {
        if p.id != g.id {
            return Err(EvalError::IdMismatch {
                index: i,
                predicted: p.id.clone(),
                gold: g.id.clone(),
            });
        }
        correct += usize::from(p.label == g.label);
    }
    Ok(correct as f64 / gold.len() as f64)
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSummary {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

/// Single-pass (Welford) mean and population standard deviation.
pub fn summarize(values: &[f64]) -> Result<MetricSummary, EvalError> {
    if values.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (k, &x) in values.iter().enumerate() {
        let delta = x - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (x - mean);
    }
    let n = values.len();
    Ok(MetricSummary {
        mean,
        std: (m2 / n as f64).max(0.0).sqrt(),
        n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Prf {
    /// Ratios with the 0/0 = 0 convention.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Prf {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Prf {
            precision,
            recall,
            f1,
            tp,
            fp,
            fn_,
        }
    }
}

/// A character range `start..end` in one document.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpanRef {
    pub doc: String,
    pub start: usize,
    pub end: usize,
}

impl SpanRef {
    pub fn new(doc: impl Into<String>, start: usize, end: usize) -> SpanRef {
        SpanRef {
            doc: doc.into(),
            start,
            end,
        }
    }
}

fn check_spans(spans: &[SpanRef]) -> Result<(), EvalError> {
    for s in spans {
        if s.start >= s.end {
            return Err(EvalError::BadSpan {
                doc: s.doc.clone(),
                start: s.start,
                end: s.end,
            });
        }
    }
    Ok(())
}

/// Exact-match precision, recall and F1 of predicted spans against gold.
/// Duplicate spans count once; gold spans may not overlap within a document.
pub fn prf_toponyms(predicted: &[SpanRef], gold: &[SpanRef]) -> Result<Prf, EvalError> {
    check_spans(predicted)?;
    check_spans(gold)?;
    let gold_set: BTreeSet<&SpanRef> = gold.iter().collect();
    let mut by_doc: BTreeMap<&str, Vec<(usize, usize)>> = BTreeMap::new();
    for s in &gold_set {
        by_doc.entry(&s.doc).or_default().push((s.start, s.end));
    }
    for (doc, spans) in &by_doc {
        // Sorted by start thanks to the set order.
        for w in spans.windows(2) {
            if w[1].0 < w[0].1 {
                return Err(EvalError::OverlappingGold {
                    doc: doc.to_string(),
                    first: w[0],
                    second: w[1],
                });
            }
        }
    }
    let pred_set: BTreeSet<&SpanRef> = predicted.iter().collect();
    let tp = pred_set.intersection(&gold_set).count();
    Ok(Prf::from_counts(tp, pred_set.len() - tp, gold_set.len() - tp))
}

/// Fold-level scores two ways: the mean (and spread) of per-fold values, and
/// a single score from counts pooled over all folds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldPrf {
    pub precision: MetricSummary,
    pub recall: MetricSummary,
    pub f1: MetricSummary,
    pub pooled: Prf,
}

pub fn prf_over_folds(folds: &[Prf]) -> Result<FoldPrf, EvalError> {
    if folds.is_empty() {
        return Err(EvalError::Empty);
    }
    let pick = |f: fn(&Prf) -> f64| summarize(&folds.iter().map(f).collect::<Vec<_>>());
    let (tp, fp, fn_) = folds
        .iter()
        .fold((0, 0, 0), |(a, b, c), p| (a + p.tp, b + p.fp, c + p.fn_));
    Ok(FoldPrf {
        precision: pick(|p| p.precision)?,
        recall: pick(|p| p.recall)?,
        f1: pick(|p| p.f1)?,
        pooled: Prf::from_counts(tp, fp, fn_),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Label;

    fn sample(id: &str, label: Label) -> Sample {
        Sample::new(id, "Paris is big", 0, 5, label, "t").unwrap()
    }

    fn pred(id: &str, label: Label) -> Prediction {
        Prediction {
            id: id.into(),
            label,
            probs: [0.5, 0.5],
        }
    }

    #[test]
    fn accuracy_counts() {
        let (l, m) = (Label::Literal, Label::Metonymic);
        let gold = vec![sample("a", l), sample("b", m), sample("c", m), sample("d", l)];
        let all = vec![pred("a", l), pred("b", m), pred("c", m), pred("d", l)];
        assert_eq!(accuracy(&all, &gold).unwrap(), 1.0);
        let three = vec![pred("a", l), pred("b", m), pred("c", l), pred("d", l)];
        assert_eq!(accuracy(&three, &gold).unwrap(), 0.75);
        let swapped = vec![pred("b", m), pred("a", l), pred("c", m), pred("d", l)];
        assert!(matches!(accuracy(&swapped, &gold), Err(EvalError::IdMismatch { index: 0, .. })));
        assert!(accuracy(&all[..3], &gold).is_err());
    }

    #[test]
    fn summarize_population_convention() {
        let s = summarize(&[0.9, 0.8]).unwrap();
        assert!((s.mean - 0.85).abs() < 1e-15);
        assert!((s.std - 0.05).abs() < 1e-15);
        assert_eq!(s.n, 2);
        let one = summarize(&[0.3]).unwrap();
        assert_eq!((one.mean, one.std, one.n), (0.3, 0.0, 1));
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn prf_examples() {
        let gold = vec![SpanRef::new("d", 0, 5), SpanRef::new("d", 10, 15)];
        assert_eq!(prf_toponyms(&gold, &gold).unwrap().f1, 1.0);
        let pred = vec![SpanRef::new("d", 0, 5), SpanRef::new("d", 20, 25)];
        let p = prf_toponyms(&pred, &gold).unwrap();
        assert_eq!((p.precision, p.recall, p.f1), (0.5, 0.5, 0.5));
        assert_eq!((p.tp, p.fp, p.fn_), (1, 1, 1));
        let empty = prf_toponyms(&[], &[]).unwrap();
        assert_eq!((empty.precision, empty.recall, empty.f1), (0.0, 0.0, 0.0));
        let overlapping = vec![SpanRef::new("d", 0, 5), SpanRef::new("d", 3, 8)];
        assert!(matches!(prf_toponyms(&[], &overlapping), Err(EvalError::OverlappingGold { .. })));
        // Same offsets in different documents do not overlap.
        let two_docs = vec![SpanRef::new("a", 0, 5), SpanRef::new("b", 0, 5)];
        assert!(prf_toponyms(&[], &two_docs).is_ok());
    }

    #[test]
    fn folds_report_mean_and_pooled() {
        let folds = [Prf::from_counts(1, 1, 0), Prf::from_counts(3, 0, 1)];
        let f = prf_over_folds(&folds).unwrap();
        assert!((f.precision.mean - 0.75).abs() < 1e-15);
        assert!((f.recall.mean - 0.875).abs() < 1e-15);
        assert_eq!((f.pooled.tp, f.pooled.fp, f.pooled.fn_), (4, 1, 1));
        assert!((f.pooled.precision - 0.8).abs() < 1e-15);
    }
}
