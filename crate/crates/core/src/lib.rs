//! Context-only metonymy resolution.
//!
//! The workbench classifies a target mention in a sentence as a literal or a
//! metonymic reading. Its central mechanism replaces the target mention with a
//! single reserved token before classification, so the prediction can only
//! depend on the surrounding context. Around that mechanism sit:
//!
//! - [`corpus`]: the canonical sample format, dataset converters, statistics
//!   and split strategies (random, lexical no-overlap, k-fold).
//! - [`tokenizer`]: a frequency-merge subword vocabulary with exact
//!   character-to-token alignment.
//! - [`transforms`]: target masking and pool-based target augmentation.
//! - [`model`]: a small transformer encoder with hand-written gradients, a
//!   span-averaging classification head and attention traces.
//! - [`trainer`]: seeded training, multi-run orchestration and ensembling.
//! - [`eval`]: metrics and report emission.
//! - [`pipeline`]: span detection, one-at-a-time masking and geoparsing.
//! - [`synthetic`]: template corpora with controllable lexical bias.

pub mod corpus;
pub mod eval;
pub mod model;
pub mod pipeline;
pub mod synthetic;
pub mod tokenizer;
pub mod trainer;
pub mod transforms;

pub(crate) mod text;

pub use corpus::{DatasetStats, Label, Sample, SplitSpec};
pub use eval::{MetricSummary, Prf};
pub use model::{AttentionTrace, ModelConfig, ModelParams};
pub use pipeline::{DetectedSpan, ResolvedMention};
pub use tokenizer::{TokenizedInput, Vocab};
pub use trainer::{Prediction, RunResult, TrainConfig, Variant};
