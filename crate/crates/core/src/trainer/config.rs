use std::fmt;

use super::TrainError;
use crate::transforms::DEFAULT_COPIES;

/// How training (and evaluation) inputs are presented to the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Plain,
    /// Training set expanded with target substitutions.
    Augmented,
    /// Target replaced by the mask token in training and evaluation.
    Masked,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Plain, Variant::Augmented, Variant::Masked];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Plain => "plain",
            Variant::Augmented => "aug",
            Variant::Masked => "mask",
        }
    }

    pub fn parse(s: &str) -> Option<Variant> {
        match s.trim().to_ascii_lowercase().as_str() {
            "plain" => Some(Variant::Plain),
            "aug" | "augmented" => Some(Variant::Augmented),
            "mask" | "masked" => Some(Variant::Masked),
            _ => None,
        }
    }

    /// Builds a variant from independent switches. Masking removes the target
    /// that augmentation substitutes, so asking for both is an error.
    pub fn from_flags(augment: bool, mask: bool) -> Result<Variant, TrainError> {
        match (augment, mask) {
            (true, true) => Err(TrainError::Config(
                "masking and augmentation cannot be combined".into(),
            )),
            (true, false) => Ok(Variant::Augmented),
            (false, true) => Ok(Variant::Masked),
            (false, false) => Ok(Variant::Plain),
        }
    }

    pub fn masks_inputs(self) -> bool {
        self == Variant::Masked
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub max_seq_len: usize,
    /// Overrides the model configuration's dropout during training.
    pub dropout: f64,
    pub seed: u64,
    pub variant: Variant,
    /// Extra copies per sample for [`Variant::Augmented`].
    pub augment_copies: usize,
    /// Restrict augmentation draws to targets of the sample's own dataset.
    pub augment_same_dataset: bool,
}

impl Default for TrainConfig {
    /// Fine-tuning defaults for pretrained encoders.
    fn default() -> Self {
        TrainConfig {
            learning_rate: 5e-5,
            batch_size: 64,
            epochs: 10,
            max_seq_len: 256,
            dropout: 0.1,
            seed: 1,
            variant: Variant::Plain,
            augment_copies: DEFAULT_COPIES,
            augment_same_dataset: false,
        }
    }
}

impl TrainConfig {
    /// Defaults for corpora with hundreds of thousands of samples: one epoch
    /// and heavier dropout.
    pub fn large_corpus() -> Self {
        TrainConfig {
            epochs: 1,
            dropout: 0.2,
            ..TrainConfig::default()
        }
    }

    /// Settings for training the small built-in encoder from random
    /// initialization, where the fine-tuning rate is far too low.
    pub fn desk() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            batch_size: 16,
            ..TrainConfig::default()
        }
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::Config(m.to_string()));
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning rate must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive");
        }
        if self.max_seq_len < 3 {
            return bad("max sequence length must be at least 3");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must be in [0, 1)");
        }
        Ok(())
    }
}
