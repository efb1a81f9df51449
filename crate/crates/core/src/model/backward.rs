//! Mean cross-entropy over a batch and its exact gradient.

use ndarray::{s, Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::forward::{forward_cached, gelu_grad, ForwardCache, NormCache};
use super::{softmax2, ModelError, ModelParams, Mode};
use crate::corpus::Label;
use crate::tokenizer::TokenizedInput;

#[derive(Debug, Clone)]
pub struct LossAndGrad {
    pub loss: f64,
    /// Same shapes as the parameters.
    pub grads: ModelParams,
}

/// Mean cross-entropy of `batch` and its gradient with respect to every
/// parameter.
///
/// In training mode one generator seeded with `dropout_seed` supplies the
/// dropout masks for the whole batch, in batch order.
pub fn loss_and_grad(params: &ModelParams, batch: &[(TokenizedInput, Label)], mode: Mode) -> Result<LossAndGrad, ModelError> {
    if batch.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let mut rng = match mode {
        Mode::Eval => None,
        Mode::Train { dropout_seed } => Some(ChaCha8Rng::seed_from_u64(dropout_seed)),
    };
    let mut grads = params.zeros_like();
    let weight = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    for (input, label) in batch {
        let cache = forward_cached(params, input, rng.as_mut())?;
        let probs = softmax2(cache.scores);
        let y = label.index();
        loss -= probs[y].max(f64::MIN_POSITIVE).ln() * weight;
        let mut dz = Array2::from_shape_vec((1, 2), probs.to_vec()).unwrap();
        dz[[0, y]] -= 1.0;
        dz *= weight;
        backward(params, input, &cache, &dz, &mut grads);
    }
    if !loss.is_finite() {
        return Err(ModelError::NonFinite("loss".into()));
    }
    Ok(LossAndGrad { loss, grads })
}

/// Returns the input gradient of a layer norm and accumulates its parameter
/// gradients.
fn layer_norm_backward(
    dy: &Array2<f64>,
    cache: &NormCache,
    gain: &Array2<f64>,
    dgain: &mut Array2<f64>,
    dbias: &mut Array2<f64>,
) -> Array2<f64> {
    *dgain += &(dy * &cache.xhat).sum_axis(Axis(0)).insert_axis(Axis(0));
    *dbias += &dy.sum_axis(Axis(0)).insert_axis(Axis(0));
    let dxhat = dy * gain;
    let h = dy.ncols() as f64;
    let mut dx = Array2::zeros(dy.dim());
    for r in 0..dy.nrows() {
        let g = dxhat.row(r);
        let xh = cache.xhat.row(r);
        let mean_g = g.sum() / h;
        let mean_gx = g.dot(&xh) / h;
        let is = cache.inv_std[r];
        let mut out = dx.row_mut(r);
        for ((o, gv), xv) in out.iter_mut().zip(g.iter()).zip(xh.iter()) {
            *o = is * (gv - mean_g - xv * mean_gx);
        }
    }
    dx
}

fn add_rows_sum(acc: &mut Array2<f64>, d: &Array2<f64>) {
    *acc += &d.sum_axis(Axis(0)).insert_axis(Axis(0));
}

fn backward(params: &ModelParams, input: &TokenizedInput, cache: &ForwardCache, dz: &Array2<f64>, grads: &mut ModelParams) {
    let c = &params.config;
    let n = input.len();
    let dh = c.head_dim();
    let scale = 1.0 / (dh as f64).sqrt();

    // Classifier head and span average.
    grads.head.weight += &cache.pooled.t().dot(dz);
    grads.head.bias += dz;
    let dpooled = dz.dot(&params.head.weight.t());
    let d = (input.target_end - input.target_start + 1) as f64;
    let mut dx = Array2::zeros((n, c.hidden));
    for r in input.target_start..=input.target_end {
        dx.row_mut(r).scaled_add(1.0 / d, &dpooled.row(0));
    }

    for (li, lc) in cache.layers.iter().enumerate().rev() {
        let lp = &params.layers[li];
        let lg = &mut grads.layers[li];

        // Feed-forward block.
        let dr2 = layer_norm_backward(&dx, &lc.norm2, &lp.ln2_gain, &mut lg.ln2_gain, &mut lg.ln2_bias);
        let mut dx1 = dr2.clone();
        lg.w2 += &lc.ffn_act.t().dot(&dr2);
        add_rows_sum(&mut lg.b2, &dr2);
        let mut dact = dr2.dot(&lp.w2.t());
        if let Some(m) = &lc.ffn_mask {
            dact *= m;
        }
        let dpre = &dact * &lc.pre_gelu.mapv(gelu_grad);
        lg.w1 += &lc.x1.t().dot(&dpre);
        add_rows_sum(&mut lg.b1, &dpre);
        dx1 += &dpre.dot(&lp.w1.t());

        // Attention block.
        let dr1 = layer_norm_backward(&dx1, &lc.norm1, &lp.ln1_gain, &mut lg.ln1_gain, &mut lg.ln1_bias);
        let mut dxin = dr1.clone();
        lg.wo += &lc.context.t().dot(&dr1);
        add_rows_sum(&mut lg.bo, &dr1);
        let dcontext = dr1.dot(&lp.wo.t());

        let mut dq = Array2::zeros((n, c.hidden));
        let mut dk = Array2::zeros((n, c.hidden));
        let mut dv = Array2::zeros((n, c.hidden));
        for a in 0..c.heads {
            let cols = s![.., a * dh..(a + 1) * dh];
            let p = &lc.probs[a];
            let dout = dcontext.slice(cols);
            let mask = lc.attn_masks.as_ref().map(|m| &m[a]);
            let p_used = match mask {
                Some(m) => p * m,
                None => p.clone(),
            };
            dv.slice_mut(cols).assign(&p_used.t().dot(&dout));
            let mut dp = dout.dot(&lc.v.slice(cols).t());
            if let Some(m) = mask {
                dp *= m;
            }
            // Softmax backward, row by row.
            let mut dlogits = Array2::zeros((n, n));
            for r in 0..n {
                let pr = p.row(r);
                let dr = dp.row(r);
                let inner = pr.dot(&dr);
                let mut out = dlogits.row_mut(r);
                for ((o, pv), dv_) in out.iter_mut().zip(pr.iter()).zip(dr.iter()) {
                    *o = pv * (dv_ - inner) * scale;
                }
            }
            dq.slice_mut(cols).assign(&dlogits.dot(&lc.k.slice(cols)));
            dk.slice_mut(cols).assign(&dlogits.t().dot(&lc.q.slice(cols)));
        }
        let xt = lc.x.t();
        lg.wq += &xt.dot(&dq);
        lg.wk += &xt.dot(&dk);
        lg.wv += &xt.dot(&dv);
        add_rows_sum(&mut lg.bq, &dq);
        add_rows_sum(&mut lg.bk, &dk);
        add_rows_sum(&mut lg.bv, &dv);
        dxin += &dq.dot(&lp.wq.t());
        dxin += &dk.dot(&lp.wk.t());
        dxin += &dv.dot(&lp.wv.t());
        dx = dxin;
    }

    let dembed = layer_norm_backward(
        &dx,
        &cache.embed_norm,
        &params.embedding_norm_gain,
        &mut grads.embedding_norm_gain,
        &mut grads.embedding_norm_bias,
    );
    for (t, &id) in input.ids.iter().enumerate() {
        let row = dembed.row(t);
        grads.token_embedding.row_mut(id as usize).scaled_add(1.0, &row);
        grads.position_embedding.row_mut(t).scaled_add(1.0, &row);
    }
}
