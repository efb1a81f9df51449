use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{derive_seed, Adam, TrainConfig, TrainError, Variant};
use crate::corpus::{Label, Sample};
use crate::eval;
use crate::model::{forward, loss_and_grad, ModelConfig, ModelError, ModelParams, Mode};
use crate::tokenizer::{tokenize_align, truncate_around_span, TokenizedInput, Vocab};
use crate::transforms::{augment, mask_target, AugmentConfig, TargetPool};

const STREAM_INIT: u64 = 0;
const STREAM_AUGMENT: u64 = 1;
const STREAM_SHUFFLE: u64 = 2;
const STREAM_DROPOUT: u64 = 3;

/// Class decision and class probabilities for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Id of the original (untransformed) sample.
    pub id: String,
    pub label: Label,
    /// Probabilities indexed by [`Label::index`].
    pub probs: [f64; 2],
}

impl Prediction {
    /// Probability of the predicted class.
    pub fn score(&self) -> f64 {
        self.probs[self.label.index()]
    }
}

/// One point of the training curve, recorded after each epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    /// Optimizer steps taken so far.
    pub step: usize,
    pub epoch: usize,
    /// Mean training loss over the epoch.
    pub train_loss: f64,
    pub dev_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub seed: u64,
    pub variant: Variant,
    pub curve: Vec<CurvePoint>,
    /// Epoch whose parameters were kept (0 means the initialization).
    pub best_epoch: usize,
    pub best_dev_accuracy: f64,
    /// Dev accuracy of the parameters after the last epoch.
    pub final_dev_accuracy: f64,
    /// Predictions of the kept parameters on the evaluation set, in its order.
    pub predictions: Vec<Prediction>,
    /// Accuracy of `predictions`.
    pub accuracy: f64,
}

/// Applies the variant's evaluation-time transform, tokenizes and truncates.
/// Masking applies to every split; augmentation only ever touches training
/// data and is not done here.
pub fn prepare_inputs(
    samples: &[Sample],
    vocab: &Vocab,
    variant: Variant,
    max_seq_len: usize,
) -> Result<Vec<(TokenizedInput, Label)>, TrainError> {
    samples
        .iter()
        .map(|s| {
            let masked;
            let s = if variant.masks_inputs() {
                masked = mask_target(s);
                &masked
            } else {
                s
            };
            let err = |source| TrainError::Tokenize { id: s.id.clone(), source };
            let input = tokenize_align(&s.text, s.span(), vocab).map_err(err)?;
            let input = truncate_around_span(&input, max_seq_len).map_err(err)?;
            Ok((input, s.label))
        })
        .collect()
}

fn predict_inputs(params: &ModelParams, samples: &[Sample], inputs: &[(TokenizedInput, Label)]) -> Result<Vec<Prediction>, TrainError> {
    samples
        .iter()
        .zip(inputs)
        .map(|(s, (input, _))| {
            let probs = forward(params, input, Mode::Eval)?.probabilities();
            // Ties go to literal.
            let label = if probs[Label::Metonymic.index()] > probs[Label::Literal.index()] {
                Label::Metonymic
            } else {
                Label::Literal
            };
            Ok(Prediction { id: s.id.clone(), label, probs })
        })
        .collect()
}

/// Classifies `samples` with `params`, applying `variant`'s evaluation-time
/// transform first.
pub fn predict(
    params: &ModelParams,
    vocab: &Vocab,
    samples: &[Sample],
    variant: Variant,
    max_seq_len: usize,
) -> Result<Vec<Prediction>, TrainError> {
    let len = max_seq_len.min(params.config.max_positions);
    let inputs = prepare_inputs(samples, vocab, variant, len)?;
    predict_inputs(params, samples, &inputs)
}

fn labels_accuracy(preds: &[Prediction], inputs: &[(TokenizedInput, Label)]) -> f64 {
    let correct = preds.iter().zip(inputs).filter(|(p, (_, y))| p.label == *y).count();
    correct as f64 / preds.len() as f64
}

struct Fit {
    params: ModelParams,
    curve: Vec<CurvePoint>,
    best_epoch: usize,
    best_dev_accuracy: f64,
    final_dev_accuracy: f64,
}

fn fit(
    config: &TrainConfig,
    train: &[Sample],
    dev: &[Sample],
    vocab: &Vocab,
    model: &ModelConfig,
) -> Result<Fit, TrainError> {
    config.validate()?;
    if train.is_empty() {
        return Err(TrainError::EmptyTrain);
    }
    if dev.is_empty() {
        return Err(TrainError::EmptyDev);
    }
    if model.vocab_size != vocab.len() {
        return Err(TrainError::Config(format!(
            "model vocabulary size {} does not match vocabulary of {} tokens",
            model.vocab_size,
            vocab.len()
        )));
    }
    let mut model = model.clone();
    model.dropout = config.dropout;
    let max_len = config.max_seq_len.min(model.max_positions);

    let train_samples = match config.variant {
        Variant::Augmented => {
            let pool = TargetPool::from_samples(train, derive_seed(config.seed, STREAM_AUGMENT, 0));
            let aug = AugmentConfig {
                copies: config.augment_copies,
                same_dataset_only: config.augment_same_dataset,
            };
            augment(train, &pool, &aug)?
        }
        _ => train.to_vec(),
    };
    let train_inputs = prepare_inputs(&train_samples, vocab, config.variant, max_len)?;
    let dev_inputs = prepare_inputs(dev, vocab, config.variant, max_len)?;

    let mut params = ModelParams::init(&model, derive_seed(config.seed, STREAM_INIT, 0))?;
    let dev_acc = |p: &ModelParams| -> Result<f64, TrainError> {
        Ok(labels_accuracy(&predict_inputs(p, dev, &dev_inputs)?, &dev_inputs))
    };

    let steps_per_epoch = train_inputs.len().div_ceil(config.batch_size);
    let mut opt = Adam::new(&params, config.learning_rate, steps_per_epoch * config.epochs);
    let mut best_dev_accuracy = dev_acc(&params)?;
    let mut final_dev_accuracy = best_dev_accuracy;
    let mut best_params = params.clone();
    let mut best_epoch = 0;
    let mut curve = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..train_inputs.len()).collect();

    for epoch in 1..=config.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, STREAM_SHUFFLE, epoch as u64));
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let step = opt.steps_taken();
            let diverged = || TrainError::Diverged {
                epoch,
                step,
                last_good_epoch: Some(epoch - 1),
            };
            let batch: Vec<(TokenizedInput, Label)> = chunk.iter().map(|&i| train_inputs[i].clone()).collect();
            let mode = Mode::Train {
                dropout_seed: derive_seed(config.seed, STREAM_DROPOUT, step as u64),
            };
            let lg = match loss_and_grad(&params, &batch, mode) {
                Ok(lg) => lg,
                Err(ModelError::NonFinite(_)) => return Err(diverged()),
                Err(e) => return Err(e.into()),
            };
            if !lg.grads.all_finite() {
                return Err(diverged());
            }
            loss_sum += lg.loss * chunk.len() as f64;
            opt.step(&mut params, &lg.grads);
            if !params.all_finite() {
                return Err(diverged());
            }
        }
        let acc = match dev_acc(&params) {
            Err(TrainError::Model(ModelError::NonFinite(_))) => {
                return Err(TrainError::Diverged {
                    epoch,
                    step: opt.steps_taken(),
                    last_good_epoch: Some(epoch - 1),
                })
            }
            other => other?,
        };
        curve.push(CurvePoint {
            step: opt.steps_taken(),
            epoch,
            train_loss: loss_sum / train_inputs.len() as f64,
            dev_accuracy: acc,
        });
        final_dev_accuracy = acc;
        if acc > best_dev_accuracy {
            best_dev_accuracy = acc;
            best_params = params.clone();
            best_epoch = epoch;
        }
    }
    Ok(Fit {
        params: best_params,
        curve,
        best_epoch,
        best_dev_accuracy,
        final_dev_accuracy,
    })
}

fn finish(config: &TrainConfig, fit: Fit, vocab: &Vocab, eval_set: &[Sample]) -> Result<(ModelParams, RunResult), TrainError> {
    let predictions = predict(&fit.params, vocab, eval_set, config.variant, config.max_seq_len)?;
    let accuracy = if eval_set.is_empty() {
        0.0
    } else {
        eval::accuracy(&predictions, eval_set).map_err(|e| TrainError::Config(e.to_string()))?
    };
    let result = RunResult {
        seed: config.seed,
        variant: config.variant,
        curve: fit.curve,
        best_epoch: fit.best_epoch,
        best_dev_accuracy: fit.best_dev_accuracy,
        final_dev_accuracy: fit.final_dev_accuracy,
        predictions,
        accuracy,
    };
    Ok((fit.params, result))
}

/// Trains one model and evaluates the kept parameters on `dev`.
///
/// The kept parameters are those with the best dev accuracy over the
/// initialization and every epoch (earliest wins ties); the result records
/// the final epoch's dev accuracy as well. Identical arguments give identical
/// results.
pub fn train(
    config: &TrainConfig,
    train: &[Sample],
    dev: &[Sample],
    vocab: &Vocab,
    model: &ModelConfig,
) -> Result<(ModelParams, RunResult), TrainError> {
    let fit = fit(config, train, dev, vocab, model)?;
    finish(config, fit, vocab, dev)
}

/// As [`train`], but the result's predictions are on `test`.
pub fn train_and_test(
    config: &TrainConfig,
    train: &[Sample],
    dev: &[Sample],
    test: &[Sample],
    vocab: &Vocab,
    model: &ModelConfig,
) -> Result<(ModelParams, RunResult), TrainError> {
    let fit = fit(config, train, dev, vocab, model)?;
    finish(config, fit, vocab, test)
}

/// Independent runs of `template`, one per seed, ordered by seed. Predictions
/// are on `test` when given, otherwise on `dev`.
pub fn run_many(
    template: &TrainConfig,
    seeds: &[u64],
    train_set: &[Sample],
    dev: &[Sample],
    test: Option<&[Sample]>,
    vocab: &Vocab,
    model: &ModelConfig,
) -> Result<Vec<RunResult>, TrainError> {
    if seeds.is_empty() {
        return Err(TrainError::Config("at least one seed is required".into()));
    }
    let mut sorted = seeds.to_vec();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(TrainError::DuplicateSeed(w[0]));
    }
    sorted
        .into_iter()
        .map(|seed| {
            let config = template.clone().with_seed(seed);
            let eval_set = test.unwrap_or(dev);
            train_and_test(&config, train_set, dev, eval_set, vocab, model)
                .map(|(_, r)| r)
                .map_err(|e| TrainError::Run { seed, source: Box::new(e) })
        })
        .collect()
}
