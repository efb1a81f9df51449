//! Seeded training, multi-run orchestration and ensembling.

mod config;
mod ensemble;
mod optim;
mod record;
mod run;

use thiserror::Error;

use crate::model::ModelError;
use crate::tokenizer::TokenizerError;
use crate::transforms::TransformError;

pub use config::{TrainConfig, Variant};
pub use ensemble::ensemble_predict;
pub use optim::Adam;
pub use record::{read_curve_csv, read_predictions_csv, write_curve_csv, write_predictions_csv};
pub use run::{predict, prepare_inputs, run_many, train, train_and_test, CurvePoint, Prediction, RunResult};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("training set is empty")]
    EmptyTrain,
    #[error("development set is empty")]
    EmptyDev,
    #[error("sample {id}: {source}")]
    Tokenize {
        id: String,
        #[source]
        source: TokenizerError,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error("training diverged at epoch {epoch}, step {step}; last good epoch: {}", last_good_epoch.map_or("none".to_string(), |e| e.to_string()))]
    Diverged {
        epoch: usize,
        step: usize,
        /// Last completed epoch whose parameters were finite (0 = initialization).
        last_good_epoch: Option<usize>,
    },
    #[error("seed {seed}: {source}")]
    Run {
        seed: u64,
        #[source]
        source: Box<TrainError>,
    },
    #[error("duplicate seed {0}")]
    DuplicateSeed(u64),
    #[error("ensemble: {0}")]
    Ensemble(String),
    #[error("{file}: {message}")]
    Format { file: String, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Derives an independent 64-bit seed for `stream`/`index` from a run seed
/// (splitmix64 finalizer over a simple combination).
pub(crate) fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
