use metores_core::corpus::CorpusError;
use metores_core::eval::EvalError;
use metores_core::model::ModelError;
use metores_core::pipeline::PipelineError;
use metores_core::tokenizer::TokenizerError;
use metores_core::trainer::TrainError;
use thiserror::Error;

/// Exit status for a rejected manifest, flag combination or input file.
pub const EXIT_VALIDATION: u8 = 2;
/// Exit status for a failure while running a valid request.
pub const EXIT_RUNTIME: u8 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("manifest {path}, line {line}: {message}")]
    Manifest { path: String, line: usize, message: String },
    #[error("{failed} of {total} runs failed")]
    PartialFailure { failed: usize, total: usize },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Tokenizer(#[from] TokenizerError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) | CliError::Manifest { .. } => EXIT_VALIDATION,
            _ => EXIT_RUNTIME,
        }
    }
}

pub fn invalid(message: impl Into<String>) -> CliError {
    CliError::Validation(message.into())
}
