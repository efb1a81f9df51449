//! Target masking and target-pool augmentation.
//!
//! Masking swaps the target mention for the literal word `X`, which the
//! tokenizer maps to its reserved mask token, so the classifier only sees the
//! context. Augmentation instead swaps the target for surface forms drawn from
//! the targets of the training set. The two do not compose: masking an
//! augmented corpus erases every substitution.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::corpus::Sample;
use crate::text;

/// The literal string that replaces masked targets.
pub const MASK_STRING: &str = "X";

/// Copies added per original sample by default, giving a corpus ten times
/// the original size.
pub const DEFAULT_COPIES: usize = 9;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TransformError {
    #[error("target pool is empty")]
    EmptyPool,
    #[error("no pool entries for dataset {0:?}")]
    NoPoolForDataset(String),
}

/// Replaces the target with `X`. The new span covers exactly that
/// character; label, dataset and the original `pmw_key` are kept, and the id
/// gains a `:mask` suffix.
pub fn mask_target(sample: &Sample) -> Sample {
    let text = text::replace_chars(&sample.text, sample.span(), MASK_STRING)
        .expect("sample span validated at construction");
    Sample {
        id: if sample.id.ends_with(":mask") {
            sample.id.clone()
        } else {
            format!("{}:mask", sample.id)
        },
        text,
        target_start: sample.target_start,
        target_end: sample.target_start + 1,
        label: sample.label,
        fine_label: sample.fine_label.clone(),
        pmw_key: sample.pmw_key.clone(),
        dataset: sample.dataset.clone(),
    }
}

pub fn mask_all(samples: &[Sample]) -> Vec<Sample> {
    samples.iter().map(mask_target).collect()
}

/// Multiset of target surface forms, sampled uniformly by occurrence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetPool {
    entries: Vec<String>,
    by_dataset: BTreeMap<String, Vec<String>>,
    seed: u64,
}

impl TargetPool {
    pub fn from_samples(samples: &[Sample], seed: u64) -> TargetPool {
        let mut by_dataset: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let entries: Vec<String> = samples
            .iter()
            .map(|s| {
                let t = s.target().to_string();
                by_dataset.entry(s.dataset.clone()).or_default().push(t.clone());
                t
            })
            .collect();
        TargetPool {
            entries,
            by_dataset,
            seed,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[String] {
        &self.entries
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentConfig {
    pub copies: usize,
    /// Draw replacements only from targets of the same dataset (a proxy for
    /// entity type, e.g. locations vs organizations).
    pub same_dataset_only: bool,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            copies: DEFAULT_COPIES,
            same_dataset_only: false,
        }
    }
}

/// Returns the originals followed by `copies` fresh samples per original, in
/// sample order. Fresh sample `k` of original `s` has id `{s.id}:aug{k}` and
/// the target replaced by a draw from the pool. Draws for sample index `i` use
/// the seed `pool.seed ^ i`, so each sample's copies are reproducible on
/// their own.
pub fn augment(samples: &[Sample], pool: &TargetPool, config: &AugmentConfig) -> Result<Vec<Sample>, TransformError> {
    if config.copies == 0 {
        return Ok(samples.to_vec());
    }
    if pool.is_empty() {
        return Err(TransformError::EmptyPool);
    }
    let mut out = Vec::with_capacity(samples.len() * (config.copies + 1));
    out.extend_from_slice(samples);
    for (i, s) in samples.iter().enumerate() {
        let candidates = if config.same_dataset_only {
            pool.by_dataset
                .get(&s.dataset)
                .ok_or_else(|| TransformError::NoPoolForDataset(s.dataset.clone()))?
        } else {
            &pool.entries
        };
        let mut rng = ChaCha8Rng::seed_from_u64(pool.seed ^ i as u64);
        for k in 1..=config.copies {
            let replacement = &candidates[rng.random_range(0..candidates.len())];
            out.push(replace_target(s, replacement, &format!("{}:aug{k}", s.id)));
        }
    }
    Ok(out)
}

fn replace_target(s: &Sample, replacement: &str, id: &str) -> Sample {
    let text = text::replace_chars(&s.text, s.span(), replacement).expect("validated span");
    Sample {
        id: id.to_string(),
        text,
        target_start: s.target_start,
        target_end: s.target_start + text::char_len(replacement),
        label: s.label,
        fine_label: s.fine_label.clone(),
        pmw_key: text::fold(replacement),
        dataset: s.dataset.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Label;
    use crate::tokenizer::{build_vocab_from_texts, tokenize_align};

    fn sample(text: &str, start: usize, end: usize) -> Sample {
        Sample::new("s", text, start, end, Label::Metonymic, "d").unwrap()
    }

    #[test]
    fn masks_the_example_sentence() {
        let m = mask_target(&sample("Germany lost in the semi-final", 0, 7));
        assert_eq!(m.text, "X lost in the semi-final");
        assert_eq!((m.target_start, m.target_end), (0, 1));
        assert_eq!(m.pmw_key, "germany");
        assert_eq!(m.label, Label::Metonymic);
        assert_eq!(m.id, "s:mask");
    }

    #[test]
    fn mask_is_a_fixed_point() {
        let m = mask_target(&sample("They met X today", 9, 10));
        assert_eq!(m.text, "They met X today");
        assert_eq!((m.target_start, m.target_end), (9, 10));
        assert_eq!(mask_target(&m), m);
    }

    #[test]
    fn multi_word_target_masks_to_one_token() {
        let m = mask_target(&sample("I love New York in June", 7, 15));
        assert_eq!(m.text, "I love X in June");
        let v = build_vocab_from_texts(["i love new york in june"], 60).unwrap();
        let t = tokenize_align(&m.text, m.span(), &v).unwrap();
        assert_eq!(t.target_len(), 1);
    }

    #[test]
    fn augmentation_by_hand() {
        let s = sample("Lyon won the cup", 0, 4);
        let pool = TargetPool::from_samples(&[sample("paris is big", 0, 5)], 7);
        let out = augment(&[s.clone()], &pool, &AugmentConfig { copies: 2, ..Default::default() }).unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(out[0], s);
        for (k, fresh) in out[1..].iter().enumerate() {
            assert_eq!(fresh.text, "paris won the cup");
            assert_eq!((fresh.target_start, fresh.target_end), (0, 5));
            assert_eq!(fresh.id, format!("s:aug{}", k + 1));
            assert_eq!(fresh.pmw_key, "paris");
        }
    }

    #[test]
    fn zero_copies_is_identity_and_empty_pool_fails() {
        let s = vec![sample("Lyon won", 0, 4)];
        let empty = TargetPool::from_samples(&[], 0);
        let cfg0 = AugmentConfig { copies: 0, ..Default::default() };
        assert_eq!(augment(&s, &empty, &cfg0).unwrap(), s);
        assert_eq!(augment(&s, &empty, &AugmentConfig::default()), Err(TransformError::EmptyPool));
    }

    #[test]
    fn same_dataset_pool() {
        let a = Sample::new("a", "Lyon won", 0, 4, Label::Literal, "loc").unwrap();
        let b = Sample::new("b", "IBM won", 0, 3, Label::Literal, "org").unwrap();
        let pool = TargetPool::from_samples(&[a.clone(), b], 1);
        let cfg = AugmentConfig { copies: 5, same_dataset_only: true };
        let out = augment(&[a], &pool, &cfg).unwrap();
        assert!(out[1..].iter().all(|s| s.target() == "Lyon"));
    }
}
