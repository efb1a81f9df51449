use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Encoder, Encoding, ModelConfig, ModelError, SpanHead};
use crate::tokenizer::TokenizedInput;

/// Weights of one encoder block. Matrices are `in x out`; biases and norm
/// parameters are `1 x n` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub wq: Array2<f64>,
    pub bq: Array2<f64>,
    pub wk: Array2<f64>,
    pub bk: Array2<f64>,
    pub wv: Array2<f64>,
    pub bv: Array2<f64>,
    pub wo: Array2<f64>,
    pub bo: Array2<f64>,
    pub ln1_gain: Array2<f64>,
    pub ln1_bias: Array2<f64>,
    pub w1: Array2<f64>,
    pub b1: Array2<f64>,
    pub w2: Array2<f64>,
    pub b2: Array2<f64>,
    pub ln2_gain: Array2<f64>,
    pub ln2_bias: Array2<f64>,
}

const LAYER_TENSORS: [&str; 16] = [
    "attention.query.weight",
    "attention.query.bias",
    "attention.key.weight",
    "attention.key.bias",
    "attention.value.weight",
    "attention.value.bias",
    "attention.output.weight",
    "attention.output.bias",
    "attention.norm.gain",
    "attention.norm.bias",
    "ffn.inner.weight",
    "ffn.inner.bias",
    "ffn.outer.weight",
    "ffn.outer.bias",
    "ffn.norm.gain",
    "ffn.norm.bias",
];

impl LayerParams {
    fn tensors(&self) -> [&Array2<f64>; 16] {
        [
            &self.wq, &self.bq, &self.wk, &self.bk, &self.wv, &self.bv, &self.wo, &self.bo,
            &self.ln1_gain, &self.ln1_bias, &self.w1, &self.b1, &self.w2, &self.b2,
            &self.ln2_gain, &self.ln2_bias,
        ]
    }

    fn tensors_mut(&mut self) -> [&mut Array2<f64>; 16] {
        [
            &mut self.wq, &mut self.bq, &mut self.wk, &mut self.bk, &mut self.wv, &mut self.bv,
            &mut self.wo, &mut self.bo, &mut self.ln1_gain, &mut self.ln1_bias, &mut self.w1,
            &mut self.b1, &mut self.w2, &mut self.b2, &mut self.ln2_gain, &mut self.ln2_bias,
        ]
    }
}

/// All trainable tensors plus the configuration they were built for.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub token_embedding: Array2<f64>,
    pub position_embedding: Array2<f64>,
    pub embedding_norm_gain: Array2<f64>,
    pub embedding_norm_bias: Array2<f64>,
    pub layers: Vec<LayerParams>,
    pub head: SpanHead,
}

fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize, bound: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-bound..bound))
}

impl ModelParams {
    /// Uniform initialization in `±1/sqrt(fan_in)` (embeddings use the hidden
    /// size as fan-in), unit norm gains, zero biases, zero classifier bias.
    pub fn init(config: &ModelConfig, seed: u64) -> Result<ModelParams, ModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = config.hidden;
        let f = config.ffn;
        let hb = 1.0 / (h as f64).sqrt();
        let fb = 1.0 / (f as f64).sqrt();
        let zeros = |n: usize| Array2::zeros((1, n));
        let ones = |n: usize| Array2::ones((1, n));
        let token_embedding = uniform(&mut rng, config.vocab_size, h, hb);
        let position_embedding = uniform(&mut rng, config.max_positions, h, hb);
        let layers = (0..config.layers)
            .map(|_| LayerParams {
                wq: uniform(&mut rng, h, h, hb),
                bq: zeros(h),
                wk: uniform(&mut rng, h, h, hb),
                bk: zeros(h),
                wv: uniform(&mut rng, h, h, hb),
                bv: zeros(h),
                wo: uniform(&mut rng, h, h, hb),
                bo: zeros(h),
                ln1_gain: ones(h),
                ln1_bias: zeros(h),
                w1: uniform(&mut rng, h, f, hb),
                b1: zeros(f),
                w2: uniform(&mut rng, f, h, fb),
                b2: zeros(h),
                ln2_gain: ones(h),
                ln2_bias: zeros(h),
            })
            .collect();
        let head = SpanHead {
            weight: uniform(&mut rng, h, config.classes, hb),
            bias: zeros(config.classes),
        };
        let mut params = ModelParams {
            config: config.clone(),
            token_embedding,
            position_embedding,
            embedding_norm_gain: ones(h),
            embedding_norm_bias: zeros(h),
            layers,
            head,
        };
        params.round_to_f32();
        Ok(params)
    }

    /// Same shapes, all zeros. Used as a gradient accumulator.
    pub fn zeros_like(&self) -> ModelParams {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.fill(0.0);
        }
        z
    }

    /// Tensor names in container order.
    pub fn tensor_names(&self) -> Vec<String> {
        let mut names: Vec<String> = vec![
            "embeddings.token".into(),
            "embeddings.position".into(),
            "embeddings.norm.gain".into(),
            "embeddings.norm.bias".into(),
        ];
        for l in 0..self.layers.len() {
            names.extend(LAYER_TENSORS.iter().map(|t| format!("layer.{l}.{t}")));
        }
        names.push("classifier.weight".into());
        names.push("classifier.bias".into());
        names
    }

    pub fn tensors(&self) -> Vec<&Array2<f64>> {
        let mut out = vec![
            &self.token_embedding,
            &self.position_embedding,
            &self.embedding_norm_gain,
            &self.embedding_norm_bias,
        ];
        for l in &self.layers {
            out.extend(l.tensors());
        }
        out.push(&self.head.weight);
        out.push(&self.head.bias);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Array2<f64>> {
        let mut out = vec![
            &mut self.token_embedding,
            &mut self.position_embedding,
            &mut self.embedding_norm_gain,
            &mut self.embedding_norm_bias,
        ];
        for l in &mut self.layers {
            out.extend(l.tensors_mut());
        }
        out.push(&mut self.head.weight);
        out.push(&mut self.head.bias);
        out
    }

    pub fn named_tensors(&self) -> Vec<(String, &Array2<f64>)> {
        self.tensor_names().into_iter().zip(self.tensors()).collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    /// Rounds every parameter to the nearest `f32`.
    pub fn round_to_f32(&mut self) {
        for t in self.tensors_mut() {
            t.mapv_inplace(|v| v as f32 as f64);
        }
    }

    /// Checks tensor shapes against the configuration.
    pub fn check_shapes(&self) -> Result<(), ModelError> {
        let reference = ModelParams::shapes(&self.config);
        let actual: Vec<(usize, usize)> = self.tensors().iter().map(|t| t.dim()).collect();
        if actual != reference {
            return Err(ModelError::Config("tensor shapes do not match the configuration".into()));
        }
        Ok(())
    }

    pub(crate) fn shapes(c: &ModelConfig) -> Vec<(usize, usize)> {
        let (h, f) = (c.hidden, c.ffn);
        let mut s = vec![(c.vocab_size, h), (c.max_positions, h), (1, h), (1, h)];
        for _ in 0..c.layers {
            s.extend([
                (h, h), (1, h), (h, h), (1, h), (h, h), (1, h), (h, h), (1, h),
                (1, h), (1, h), (h, f), (1, f), (f, h), (1, h), (1, h), (1, h),
            ]);
        }
        s.extend([(h, c.classes), (1, c.classes)]);
        s
    }
}

impl Encoder for ModelParams {
    fn hidden_size(&self) -> usize {
        self.config.hidden
    }

    fn encode(&self, input: &TokenizedInput) -> Result<Encoding, ModelError> {
        let out = super::forward(self, input, super::Mode::Eval)?;
        Ok(Encoding {
            hidden: out.hidden,
            attention: out.trace.layers.into_iter().map(|l| l.probs).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_seeded_and_shaped() {
        let c = ModelConfig::tiny(30);
        let a = ModelParams::init(&c, 3).unwrap();
        assert_eq!(a, ModelParams::init(&c, 3).unwrap());
        assert_ne!(a, ModelParams::init(&c, 4).unwrap());
        a.check_shapes().unwrap();
        assert_eq!(a.tensor_names().len(), a.tensors().len());
        assert!(a.head.bias.iter().all(|&b| b == 0.0));
        assert!(a.tensors().iter().all(|t| t.iter().all(|&v| v == v as f32 as f64)));
    }

    #[test]
    fn config_validation() {
        let mut c = ModelConfig::desk(10);
        c.heads = 3;
        assert!(ModelParams::init(&c, 0).is_err());
        let mut c = ModelConfig::desk(10);
        c.dropout = 1.0;
        assert!(c.validate().is_err());
        c.dropout = 0.0;
        c.layers = 0;
        assert!(c.validate().is_err());
    }
}
