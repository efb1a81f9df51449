//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use metores_core::corpus::Label;
use metores_core::model::{loss_and_grad, ModelParams, Mode};
use metores_core::tokenizer::TokenizedInput;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Denominator floor for the relative error, so parameters whose gradient is
/// essentially zero are compared on an absolute scale.
pub const GRAD_FLOOR: f64 = 1e-7;

#[derive(Debug)]
pub struct GradCheck {
    pub checked: usize,
    pub worst_rel: f64,
    pub worst_name: String,
    pub failures: Vec<String>,
}

pub fn random_input(rng: &mut ChaCha8Rng, vocab: usize, max_words: usize) -> TokenizedInput {
    let words = rng.random_range(2..=max_words);
    let mut ids = vec![2u32];
    ids.extend((0..words).map(|_| rng.random_range(4..vocab as u32)));
    ids.push(3);
    let start = rng.random_range(1..=words);
    let end = rng.random_range(start..=words.min(start + 2));
    let n = ids.len();
    TokenizedInput { ids, target_start: start, target_end: end, alignment: vec![None; n] }
}

pub fn random_batch(seed: u64, vocab: usize, size: usize, max_words: usize) -> Vec<(TokenizedInput, Label)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..size)
        .map(|_| {
            let x = random_input(&mut rng, vocab, max_words);
            let y = if rng.random_bool(0.5) { Label::Literal } else { Label::Metonymic };
            (x, y)
        })
        .collect()
}

/// Central finite differences on `samples` randomly chosen scalars, drawn so
/// every parameter tensor is visited at least once when `samples` allows.
pub fn gradient_check(
    params: &ModelParams,
    batch: &[(TokenizedInput, Label)],
    mode: Mode,
    samples: usize,
    eps: f64,
    tol: f64,
    seed: u64,
) -> GradCheck {
    let analytic = loss_and_grad(params, batch, mode).expect("loss");
    let names = params.tensor_names();
    let shapes: Vec<(usize, usize)> = params.tensors().iter().map(|t| t.dim()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = params.clone();
    let mut out = GradCheck { checked: 0, worst_rel: 0.0, worst_name: String::new(), failures: Vec::new() };
    for k in 0..samples {
        let t = if k < names.len() { k } else { rng.random_range(0..names.len()) };
        let (rows, cols) = shapes[t];
        let (r, c) = (rng.random_range(0..rows), rng.random_range(0..cols));
        let orig = params.tensors()[t][[r, c]];
        p.tensors_mut()[t][[r, c]] = orig + eps;
        let plus = loss_and_grad(&p, batch, mode).unwrap().loss;
        p.tensors_mut()[t][[r, c]] = orig - eps;
        let minus = loss_and_grad(&p, batch, mode).unwrap().loss;
        p.tensors_mut()[t][[r, c]] = orig;
        let numeric = (plus - minus) / (2.0 * eps);
        let exact = analytic.grads.tensors()[t][[r, c]];
        let rel = (numeric - exact).abs() / numeric.abs().max(exact.abs()).max(GRAD_FLOOR);
        let label = format!("{}[{r},{c}]", names[t]);
        if rel > out.worst_rel {
            out.worst_rel = rel;
            out.worst_name = label.clone();
        }
        if rel > tol {
            out.failures.push(format!("{label}: analytic {exact:e} numeric {numeric:e} rel {rel:e}"));
        }
        out.checked += 1;
    }
    out
}
