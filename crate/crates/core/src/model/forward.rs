use ndarray::{s, Array2, Axis};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{softmax2, ModelError, ModelParams, Mode, LAYER_NORM_EPS};
use crate::tokenizer::{TokenizedInput, Vocab};

/// Attention probabilities and pre-softmax logits of one layer, per head.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerAttention {
    pub probs: Vec<Array2<f64>>,
    pub logits: Vec<Array2<f64>>,
}

/// Attention of every layer and head, plus what is needed to read off the
/// weight placed on the target.
///
/// The target mass of a head is the probability assigned to the target key
/// positions (summed over them), averaged over all non-padding query
/// positions. A layer's value is the mean of its heads' masses.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionTrace {
    pub target_start: usize,
    pub target_end: usize,
    /// Number of non-padding positions.
    pub query_len: usize,
    pub layers: Vec<LayerAttention>,
}

impl AttentionTrace {
    pub fn head_target_mass(&self, layer: usize, head: usize) -> f64 {
        let p = &self.layers[layer].probs[head];
        let mut total = 0.0;
        for q in 0..self.query_len {
            for k in self.target_start..=self.target_end {
                total += p[[q, k]];
            }
        }
        total / self.query_len as f64
    }

    /// One value per layer: head-averaged target mass.
    pub fn per_layer(&self) -> Vec<f64> {
        (0..self.layers.len())
            .map(|l| {
                let heads = self.layers[l].probs.len();
                (0..heads).map(|h| self.head_target_mass(l, h)).sum::<f64>() / heads as f64
            })
            .collect()
    }
}

/// Per-layer target attention of a trace.
pub fn extract_attention(trace: &AttentionTrace) -> Vec<f64> {
    trace.per_layer()
}

#[derive(Debug, Clone)]
pub struct ForwardOutput {
    pub scores: [f64; 2],
    /// Last-layer hidden states, `seq x hidden`.
    pub hidden: Array2<f64>,
    pub trace: AttentionTrace,
}

impl ForwardOutput {
    pub fn probabilities(&self) -> [f64; 2] {
        softmax2(self.scores)
    }
}

/// Element-wise mean of rows `start..=end`. The span must avoid the first and
/// last rows, which hold `[CLS]` and `[SEP]`.
pub fn span_average(hidden: &Array2<f64>, start: usize, end: usize) -> Result<Array2<f64>, ModelError> {
    let rows = hidden.nrows();
    if start < 1 || end < start || end + 1 >= rows {
        return Err(ModelError::BadSpan { start, end, len: rows });
    }
    let sum = hidden.slice(s![start..=end, ..]).sum_axis(Axis(0));
    let d = (end - start + 1) as f64;
    Ok((sum / d).insert_axis(Axis(0)))
}

pub(crate) struct NormCache {
    pub xhat: Array2<f64>,
    pub inv_std: Vec<f64>,
}

pub(crate) fn layer_norm(x: &Array2<f64>, gain: &Array2<f64>, bias: &Array2<f64>) -> (Array2<f64>, NormCache) {
    let (n, h) = x.dim();
    let mut xhat = Array2::zeros((n, h));
    let mut inv_std = Vec::with_capacity(n);
    for (r, row) in x.rows().into_iter().enumerate() {
        let mean = row.sum() / h as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / h as f64;
        let is = 1.0 / (var + LAYER_NORM_EPS).sqrt();
        inv_std.push(is);
        let mut out = xhat.row_mut(r);
        for (o, v) in out.iter_mut().zip(row.iter()) {
            *o = (v - mean) * is;
        }
    }
    let y = &xhat * gain + bias;
    (y, NormCache { xhat, inv_std })
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;

pub(crate) fn gelu(u: f64) -> f64 {
    0.5 * u * (1.0 + (GELU_C * (u + GELU_A * u * u * u)).tanh())
}

pub(crate) fn gelu_grad(u: f64) -> f64 {
    let t = (GELU_C * (u + GELU_A * u * u * u)).tanh();
    0.5 * (1.0 + t) + 0.5 * u * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * u * u)
}

/// Row softmax over valid keys; padded keys get probability zero.
pub(crate) fn masked_softmax(logits: &Array2<f64>, key_valid: &[bool]) -> Array2<f64> {
    let mut p = logits.clone();
    for mut row in p.rows_mut() {
        let mut max = f64::NEG_INFINITY;
        for (v, &ok) in row.iter().zip(key_valid) {
            if ok && *v > max {
                max = *v;
            }
        }
        let mut z = 0.0;
        for (v, &ok) in row.iter_mut().zip(key_valid) {
            *v = if ok { (*v - max).exp() } else { 0.0 };
            z += *v;
        }
        row.mapv_inplace(|v| v / z);
    }
    p
}

fn dropout_mask(rng: &mut ChaCha8Rng, shape: (usize, usize), p: f64) -> Array2<f64> {
    let keep = 1.0 / (1.0 - p);
    Array2::from_shape_fn(shape, |_| if rng.random::<f64>() < p { 0.0 } else { keep })
}

pub(crate) struct LayerCache {
    pub x: Array2<f64>,
    pub q: Array2<f64>,
    pub k: Array2<f64>,
    pub v: Array2<f64>,
    pub probs: Vec<Array2<f64>>,
    pub logits: Vec<Array2<f64>>,
    pub attn_masks: Option<Vec<Array2<f64>>>,
    pub context: Array2<f64>,
    pub norm1: NormCache,
    pub x1: Array2<f64>,
    pub pre_gelu: Array2<f64>,
    pub ffn_act: Array2<f64>,
    pub ffn_mask: Option<Array2<f64>>,
    pub norm2: NormCache,
}

pub(crate) struct ForwardCache {
    pub embed_norm: NormCache,
    pub layers: Vec<LayerCache>,
    pub hidden: Array2<f64>,
    pub pooled: Array2<f64>,
    pub scores: [f64; 2],
}

fn check_finite(a: &Array2<f64>, what: impl FnOnce() -> String) -> Result<(), ModelError> {
    if a.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(ModelError::NonFinite(what()))
    }
}

pub(crate) fn validate_input(params: &ModelParams, input: &TokenizedInput) -> Result<(), ModelError> {
    let c = &params.config;
    let n = input.len();
    if n > c.max_positions {
        return Err(ModelError::TooLong { len: n, max: c.max_positions });
    }
    if let Some((position, &id)) = input.ids.iter().enumerate().find(|(_, &id)| id as usize >= c.vocab_size) {
        return Err(ModelError::TokenOutOfRange { id, position, vocab_size: c.vocab_size });
    }
    let unpadded = input.unpadded_len();
    if input.target_start < 1 || input.target_end < input.target_start || input.target_end + 1 >= unpadded {
        return Err(ModelError::BadSpan {
            start: input.target_start,
            end: input.target_end,
            len: unpadded,
        });
    }
    Ok(())
}

pub(crate) fn forward_cached(
    params: &ModelParams,
    input: &TokenizedInput,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Result<ForwardCache, ModelError> {
    validate_input(params, input)?;
    let c = &params.config;
    let n = input.len();
    let h = c.hidden;
    let dh = c.head_dim();
    let scale = 1.0 / (dh as f64).sqrt();
    let key_valid: Vec<bool> = input.ids.iter().map(|&id| id != Vocab::PAD).collect();
    let p_drop = c.dropout;
    let dropping = rng.is_some() && p_drop > 0.0;

    let mut embed = Array2::zeros((n, h));
    for (t, &id) in input.ids.iter().enumerate() {
        let mut row = embed.row_mut(t);
        row.assign(&params.token_embedding.row(id as usize));
        row += &params.position_embedding.row(t);
    }
    let (mut x, embed_norm) = layer_norm(&embed, &params.embedding_norm_gain, &params.embedding_norm_bias);
    check_finite(&x, || "embeddings".into())?;

    let mut layers = Vec::with_capacity(params.layers.len());
    for (li, lp) in params.layers.iter().enumerate() {
        let q = x.dot(&lp.wq) + &lp.bq;
        let k = x.dot(&lp.wk) + &lp.bk;
        let v = x.dot(&lp.wv) + &lp.bv;
        let mut context = Array2::zeros((n, h));
        let mut probs = Vec::with_capacity(c.heads);
        let mut logits_all = Vec::with_capacity(c.heads);
        let mut masks = dropping.then(|| Vec::with_capacity(c.heads));
        for a in 0..c.heads {
            let cols = s![.., a * dh..(a + 1) * dh];
            let logits = q.slice(cols).dot(&k.slice(cols).t()) * scale;
            let p = masked_softmax(&logits, &key_valid);
            let out = match (&mut masks, rng.as_deref_mut()) {
                (Some(ms), Some(r)) => {
                    let m = dropout_mask(r, (n, n), p_drop);
                    let o = (&p * &m).dot(&v.slice(cols));
                    ms.push(m);
                    o
                }
                _ => p.dot(&v.slice(cols)),
            };
            context.slice_mut(cols).assign(&out);
            probs.push(p);
            logits_all.push(logits);
        }
        let attn_out = context.dot(&lp.wo) + &lp.bo;
        let (x1, norm1) = layer_norm(&(&x + &attn_out), &lp.ln1_gain, &lp.ln1_bias);
        let pre_gelu = x1.dot(&lp.w1) + &lp.b1;
        let mut ffn_act = pre_gelu.mapv(gelu);
        let ffn_mask = match rng.as_deref_mut() {
            Some(r) if dropping => {
                let m = dropout_mask(r, ffn_act.dim(), p_drop);
                ffn_act = &ffn_act * &m;
                Some(m)
            }
            _ => None,
        };
        let ffn_out = ffn_act.dot(&lp.w2) + &lp.b2;
        let (x2, norm2) = layer_norm(&(&x1 + &ffn_out), &lp.ln2_gain, &lp.ln2_bias);
        check_finite(&x2, || format!("layer {}", li + 1))?;
        layers.push(LayerCache {
            x,
            q,
            k,
            v,
            probs,
            logits: logits_all,
            attn_masks: masks,
            context,
            norm1,
            x1,
            pre_gelu,
            ffn_act,
            ffn_mask,
            norm2,
        });
        x = x2;
    }

    let pooled = span_average(&x, input.target_start, input.target_end)?;
    let scores = params.head.scores(&pooled);
    if !scores.iter().all(|s| s.is_finite()) {
        return Err(ModelError::NonFinite("classifier".into()));
    }
    Ok(ForwardCache {
        embed_norm,
        layers,
        hidden: x,
        pooled,
        scores,
    })
}

/// Runs the encoder and head on one input.
///
/// In [`Mode::Eval`] no dropout is applied and the result is a pure function
/// of `params` and `input`.
pub fn forward(params: &ModelParams, input: &TokenizedInput, mode: Mode) -> Result<ForwardOutput, ModelError> {
    let mut rng = match mode {
        Mode::Eval => None,
        Mode::Train { dropout_seed } => Some(ChaCha8Rng::seed_from_u64(dropout_seed)),
    };
    let cache = forward_cached(params, input, rng.as_mut())?;
    let trace = AttentionTrace {
        target_start: input.target_start,
        target_end: input.target_end,
        query_len: input.unpadded_len(),
        layers: cache
            .layers
            .into_iter()
            .map(|l| LayerAttention { probs: l.probs, logits: l.logits })
            .collect(),
    };
    Ok(ForwardOutput {
        scores: cache.scores,
        hidden: cache.hidden,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;
    use ndarray::array;

    fn input(ids: Vec<u32>, target: (usize, usize)) -> TokenizedInput {
        let n = ids.len();
        TokenizedInput {
            ids,
            target_start: target.0,
            target_end: target.1,
            alignment: (0..n).map(|_| None).collect(),
        }
    }

    #[test]
    fn span_average_arithmetic() {
        let h = array![[0.0, 0.0], [1.0, 3.0], [3.0, 5.0], [0.0, 0.0]];
        assert_eq!(span_average(&h, 1, 2).unwrap(), array![[2.0, 4.0]]);
        assert_eq!(span_average(&h, 2, 2).unwrap(), array![[3.0, 5.0]]);
        assert!(span_average(&h, 0, 1).is_err());
        assert!(span_average(&h, 1, 3).is_err());
    }

    #[test]
    fn zero_head_scores_zero() {
        let mut p = ModelParams::init(&ModelConfig::tiny(20), 1).unwrap();
        p.head.weight.fill(0.0);
        let out = forward(&p, &input(vec![2, 7, 8, 9, 3], (2, 3)), Mode::Eval).unwrap();
        assert_eq!(out.scores, [0.0, 0.0]);
    }

    #[test]
    fn single_token_pool_is_the_row() {
        let p = ModelParams::init(&ModelConfig::tiny(20), 2).unwrap();
        let inp = input(vec![2, 7, 8, 9, 3], (2, 2));
        let out = forward(&p, &inp, Mode::Eval).unwrap();
        let pooled = span_average(&out.hidden, 2, 2).unwrap();
        assert_eq!(pooled.row(0), out.hidden.row(2));
        assert_eq!(out.scores, p.head.scores(&pooled));
    }

    #[test]
    fn attention_rows_are_distributions() {
        let p = ModelParams::init(&ModelConfig::tiny(20), 3).unwrap();
        let out = forward(&p, &input(vec![2, 7, 8, 9, 11, 3], (1, 2)), Mode::Train { dropout_seed: 5 }).unwrap();
        for layer in &out.trace.layers {
            for probs in &layer.probs {
                for row in probs.rows() {
                    assert!((row.sum() - 1.0).abs() < 1e-6);
                }
            }
        }
        for v in out.trace.per_layer() {
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn uniform_attention_gives_inverse_length() {
        let mut p = ModelParams::init(&ModelConfig::tiny(20), 4).unwrap();
        p.config.layers = 1;
        p.config.heads = 1;
        p.layers.truncate(1);
        p.layers[0].wq.fill(0.0);
        let out = forward(&p, &input(vec![2, 7, 8, 9, 3], (2, 2)), Mode::Eval).unwrap();
        let values = extract_attention(&out.trace);
        assert_eq!(values.len(), 1);
        assert!((values[0] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn head_average_of_masses() {
        let uniform = |n: usize, w: f64| Array2::from_elem((n, n), w);
        let mut a = uniform(4, 0.25);
        let mut b = uniform(4, 0.25);
        for q in 0..4 {
            a[[q, 1]] = 0.1;
            a[[q, 2]] = 0.4;
            b[[q, 1]] = 0.3;
            b[[q, 2]] = 0.2;
        }
        let trace = AttentionTrace {
            target_start: 1,
            target_end: 1,
            query_len: 4,
            layers: vec![LayerAttention { probs: vec![a, b], logits: vec![] }],
        };
        assert!((extract_attention(&trace)[0] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = ModelParams::init(&ModelConfig::tiny(20), 1).unwrap();
        assert!(matches!(
            forward(&p, &input(vec![2, 70, 3], (1, 1)), Mode::Eval),
            Err(ModelError::TokenOutOfRange { id: 70, position: 1, .. })
        ));
        assert!(matches!(
            forward(&p, &input(vec![2; 65], (1, 1)), Mode::Eval),
            Err(ModelError::TooLong { .. })
        ));
    }

    #[test]
    fn nan_weights_name_the_layer() {
        let mut p = ModelParams::init(&ModelConfig::tiny(20), 1).unwrap();
        p.layers[1].w2[[0, 0]] = f64::NAN;
        match forward(&p, &input(vec![2, 7, 8, 3], (1, 1)), Mode::Eval) {
            Err(ModelError::NonFinite(what)) => assert_eq!(what, "layer 2"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
