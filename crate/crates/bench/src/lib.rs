//! Shared setup for the criterion benchmarks in `benches/`.

use metores_core::corpus::Label;
use metores_core::model::{ModelConfig, ModelParams};
use metores_core::synthetic::separable_corpus;
use metores_core::tokenizer::build_vocab;
use metores_core::trainer::prepare_inputs;
use metores_core::{Sample, TokenizedInput, Variant, Vocab};

/// A synthetic corpus, its vocabulary and desk-sized parameters.
pub struct Workload {
    pub samples: Vec<Sample>,
    pub vocab: Vocab,
    pub params: ModelParams,
    pub inputs: Vec<(TokenizedInput, Label)>,
}

impl Workload {
    pub fn desk(n: usize) -> Workload {
        let samples = separable_corpus(n, 1);
        let vocab = build_vocab(&samples, 400).expect("vocabulary");
        let params = ModelParams::init(&ModelConfig::desk(vocab.len()), 1).expect("parameters");
        let inputs = prepare_inputs(&samples, &vocab, Variant::Masked, 128).expect("inputs");
        Workload {
            samples,
            vocab,
            params,
            inputs,
        }
    }
}
