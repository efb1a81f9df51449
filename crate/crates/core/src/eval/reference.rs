//! Published figures for a pretrained large encoder fine-tuned with the same
//! three input variants. They are printed beside local results for
//! comparison and are never used as pass/fail thresholds: a small encoder
//! trained from scratch is not expected to reach them.
//!
//! Accuracies and scores are percentages; `None` marks combinations that
//! were not reported.

use crate::trainer::Variant;

/// Published accuracy: mean and standard deviation over 10 runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublishedAccuracy {
    pub dataset: &'static str,
    pub variant: Variant,
    pub mean: f64,
    pub std: f64,
}

const fn acc(dataset: &'static str, variant: Variant, mean: f64, std: f64) -> PublishedAccuracy {
    PublishedAccuracy { dataset, variant, mean, std }
}

pub const PUBLISHED_ACCURACY: &[PublishedAccuracy] = &[
    acc("semeval_loc", Variant::Plain, 84.7, 0.71),
    acc("semeval_loc", Variant::Augmented, 85.0, 1.10),
    acc("semeval_loc", Variant::Masked, 88.2, 0.61),
    acc("relocar", Variant::Plain, 91.3, 0.57),
    acc("relocar", Variant::Augmented, 91.4, 0.86),
    acc("relocar", Variant::Masked, 94.4, 0.31),
    acc("conll", Variant::Plain, 89.5, 0.84),
    acc("conll", Variant::Masked, 93.9, 0.54),
    acc("gwn", Variant::Plain, 88.3, 1.02),
    acc("gwn", Variant::Augmented, 86.1, 1.21),
    acc("gwn", Variant::Masked, 91.2, 0.40),
    acc("wimcor", Variant::Plain, 93.7, 0.17),
    acc("wimcor", Variant::Masked, 95.5, 0.13),
    acc("semeval_org", Variant::Plain, 74.3, 1.12),
    acc("semeval_org", Variant::Augmented, 75.1, 0.58),
    acc("semeval_org", Variant::Masked, 77.2, 1.15),
];

/// Published accuracy of a majority ensemble of masked runs.
pub const PUBLISHED_ENSEMBLE: &[(&str, f64)] = &[
    ("semeval_loc", 89.1),
    ("relocar", 94.8),
    ("conll", 94.6),
    ("gwn", 92.0),
    ("wimcor", 95.9),
    ("semeval_org", 79.6),
];

/// Published cross-domain accuracy (train on `source`, test on `target`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublishedTransfer {
    pub source: &'static str,
    pub target: &'static str,
    pub variant: Variant,
    pub mean: f64,
    pub std: f64,
}

const fn tr(source: &'static str, target: &'static str, variant: Variant, mean: f64, std: f64) -> PublishedTransfer {
    PublishedTransfer { source, target, variant, mean, std }
}

pub const PUBLISHED_CROSS_DOMAIN: &[PublishedTransfer] = &[
    tr("semeval_loc", "relocar", Variant::Plain, 65.9, 1.81),
    tr("semeval_loc", "relocar", Variant::Augmented, 66.8, 2.50),
    tr("semeval_loc", "relocar", Variant::Masked, 75.2, 1.05),
    tr("relocar", "semeval_loc", Variant::Plain, 71.9, 2.63),
    tr("relocar", "semeval_loc", Variant::Augmented, 70.0, 1.79),
    tr("relocar", "semeval_loc", Variant::Masked, 74.8, 1.29),
    tr("conll", "relocar", Variant::Plain, 88.9, 0.69),
    tr("conll", "relocar", Variant::Augmented, 88.1, 0.66),
    tr("conll", "relocar", Variant::Masked, 93.5, 0.40),
    tr("conll", "semeval_loc", Variant::Plain, 81.0, 1.16),
    tr("conll", "semeval_loc", Variant::Augmented, 80.8, 0.79),
    tr("conll", "semeval_loc", Variant::Masked, 82.5, 1.69),
    tr("wimcor", "relocar", Variant::Plain, 51.6, 1.55),
    tr("wimcor", "relocar", Variant::Masked, 64.6, 1.05),
    tr("wimcor", "semeval_loc", Variant::Plain, 78.2, 0.56),
    tr("wimcor", "semeval_loc", Variant::Masked, 78.4, 0.97),
];

/// Published end-to-end geoparsing scores on GWN, 5-fold mean and std:
/// (precision, recall, F1), each as (mean, std).
pub const PUBLISHED_GEOPARSE: [(f64, f64); 3] = [(80.9, 1.58), (81.3, 1.19), (81.1, 0.93)];

/// Published dataset statistics: literal, metonymic, total, distinct PMWs,
/// average document length in words.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublishedStats {
    pub dataset: &'static str,
    pub n_literal: usize,
    pub n_metonymic: usize,
    pub n_total: usize,
    pub n_unique_pmw: usize,
    pub avg_doc_length_words: f64,
}

const fn st(dataset: &'static str, l: usize, m: usize, t: usize, p: usize, a: f64) -> PublishedStats {
    PublishedStats {
        dataset,
        n_literal: l,
        n_metonymic: m,
        n_total: t,
        n_unique_pmw: p,
        avg_doc_length_words: a,
    }
}

pub const PUBLISHED_STATS: &[PublishedStats] = &[
    st("semeval_org", 1211, 721, 1932, 433, 27.3),
    st("semeval_loc", 1458, 375, 1833, 262, 26.6),
    st("relocar", 995, 1031, 2026, 603, 22.7),
    st("conll", 4609, 2448, 7057, 1685, 24.6),
    st("gwn", 841, 630, 1471, 600, 26.8),
    st("wimcor", 154322, 51678, 206000, 1029, 85.3),
];

pub fn published_accuracy(dataset: &str, variant: Variant) -> Option<PublishedAccuracy> {
    PUBLISHED_ACCURACY
        .iter()
        .find(|a| a.dataset == dataset && a.variant == variant)
        .copied()
}

pub fn published_ensemble(dataset: &str) -> Option<f64> {
    PUBLISHED_ENSEMBLE.iter().find(|(d, _)| *d == dataset).map(|(_, v)| *v)
}

pub fn published_transfer(source: &str, target: &str, variant: Variant) -> Option<PublishedTransfer> {
    PUBLISHED_CROSS_DOMAIN
        .iter()
        .find(|t| t.source == source && t.target == target && t.variant == variant)
        .copied()
}

pub fn published_stats(dataset: &str) -> Option<PublishedStats> {
    PUBLISHED_STATS.iter().find(|s| s.dataset == dataset).copied()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookups() {
        assert_eq!(published_transfer("conll", "relocar", Variant::Masked).unwrap().mean, 93.5);
        assert!(published_transfer("wimcor", "relocar", Variant::Augmented).is_none());
        assert_eq!(published_accuracy("relocar", Variant::Masked).unwrap().mean, 94.4);
        let r = published_stats("relocar").unwrap();
        assert_eq!((r.n_literal, r.n_metonymic, r.n_total, r.n_unique_pmw), (995, 1031, 2026, 603));
        for s in PUBLISHED_STATS {
            assert_eq!(s.n_literal + s.n_metonymic, s.n_total, "{}", s.dataset);
        }
    }
}
