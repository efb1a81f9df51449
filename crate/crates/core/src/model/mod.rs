//! Transformer encoder with a span-averaging classification head.
//!
//! The encoder is a post-norm transformer: token plus position embeddings,
//! layer norm, then `layers` blocks of multi-head self-attention and a GELU
//! feed-forward network, each wrapped in a residual connection and layer
//! norm. The head averages the last-layer rows of the target tokens and maps
//! the average to two class scores with one linear layer.
//!
//! Gradients are derived by hand (see `backward.rs`). Arithmetic runs in
//! `f64`; parameters are rounded to `f32` after initialization and after every
//! optimizer step so checkpoints of 32-bit floats reload bit-exactly.

mod backward;
mod checkpoint;
mod forward;
mod params;

use ndarray::Array2;
use thiserror::Error;

use crate::tokenizer::TokenizedInput;

pub use backward::{loss_and_grad, LossAndGrad};
pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint};
pub use forward::{extract_attention, forward, span_average, AttentionTrace, ForwardOutput, LayerAttention};
pub use params::{LayerParams, ModelParams};

/// Normalization epsilon for every layer norm.
pub const LAYER_NORM_EPS: f64 = 1e-5;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("token id {id} at position {position} is outside the vocabulary of {vocab_size}")]
    TokenOutOfRange { id: u32, position: usize, vocab_size: usize },
    #[error("sequence of {len} tokens exceeds {max} positions")]
    TooLong { len: usize, max: usize },
    #[error("target span {start}..={end} must lie strictly inside a sequence of {len}")]
    BadSpan { start: usize, end: usize, len: usize },
    #[error("non-finite values in {0}")]
    NonFinite(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub hidden: usize,
    pub layers: usize,
    pub heads: usize,
    pub ffn: usize,
    pub max_positions: usize,
    pub dropout: f64,
    pub classes: usize,
}

impl ModelConfig {
    /// CPU-sized default: 4 layers of width 64 with 4 heads.
    pub fn desk(vocab_size: usize) -> ModelConfig {
        ModelConfig {
            vocab_size,
            hidden: 64,
            layers: 4,
            heads: 4,
            ffn: 256,
            max_positions: 256,
            dropout: 0.1,
            classes: 2,
        }
    }

    /// The configuration used for gradient checks.
    pub fn tiny(vocab_size: usize) -> ModelConfig {
        ModelConfig {
            vocab_size,
            hidden: 16,
            layers: 2,
            heads: 2,
            ffn: 32,
            max_positions: 64,
            dropout: 0.1,
            classes: 2,
        }
    }

    pub fn head_dim(&self) -> usize {
        self.hidden / self.heads
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let sizes = [
            ("vocab_size", self.vocab_size),
            ("hidden", self.hidden),
            ("layers", self.layers),
            ("heads", self.heads),
            ("ffn", self.ffn),
            ("max_positions", self.max_positions),
        ];
        if let Some((name, _)) = sizes.iter().find(|(_, v)| *v == 0) {
            return Err(ModelError::Config(format!("{name} must be at least 1")));
        }
        if self.hidden % self.heads != 0 {
            return Err(ModelError::Config(format!(
                "hidden size {} is not divisible by {} heads",
                self.hidden, self.heads
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ModelError::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if self.classes != 2 {
            return Err(ModelError::Config("only binary classification is supported".into()));
        }
        Ok(())
    }
}

/// Whether dropout is active. Training mode draws dropout masks from a
/// generator seeded with `dropout_seed`, so a pass is reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Eval,
    Train { dropout_seed: u64 },
}

/// Contextual encoder output: last-layer hidden states plus per-layer,
/// per-head attention probabilities.
#[derive(Debug, Clone)]
pub struct Encoding {
    pub hidden: Array2<f64>,
    pub attention: Vec<Vec<Array2<f64>>>,
}

/// Anything that turns a tokenized sentence into hidden states. The built-in
/// transformer implements it through [`ModelParams`]; a pretrained encoder
/// can be slotted in behind the same interface.
pub trait Encoder {
    fn hidden_size(&self) -> usize;
    fn encode(&self, input: &TokenizedInput) -> Result<Encoding, ModelError>;
}

/// Linear classification head over span-averaged hidden states.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanHead {
    /// `hidden x classes`.
    pub weight: Array2<f64>,
    /// `1 x classes`.
    pub bias: Array2<f64>,
}

impl SpanHead {
    pub fn scores(&self, pooled: &Array2<f64>) -> [f64; 2] {
        let z = pooled.dot(&self.weight) + &self.bias;
        [z[[0, 0]], z[[0, 1]]]
    }
}

/// Classifies the input's target span with any encoder.
pub fn classify_with<E: Encoder>(encoder: &E, head: &SpanHead, input: &TokenizedInput) -> Result<[f64; 2], ModelError> {
    let enc = encoder.encode(input)?;
    let pooled = span_average(&enc.hidden, input.target_start, input.target_end)?;
    Ok(head.scores(&pooled))
}

/// Class probabilities from raw scores.
pub fn softmax2(scores: [f64; 2]) -> [f64; 2] {
    let m = scores[0].max(scores[1]);
    let e0 = (scores[0] - m).exp();
    let e1 = (scores[1] - m).exp();
    let z = e0 + e1;
    [e0 / z, e1 / z]
}
