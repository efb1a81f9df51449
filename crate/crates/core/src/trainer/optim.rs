use crate::model::ModelParams;

/// Adam with a linearly decaying learning rate and no warmup.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub total_steps: usize,
    step: usize,
    m: ModelParams,
    v: ModelParams,
}

impl Adam {
    pub fn new(params: &ModelParams, learning_rate: f64, total_steps: usize) -> Adam {
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            total_steps,
            step: 0,
            m: params.zeros_like(),
            v: params.zeros_like(),
        }
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    /// Learning rate used for the next step.
    pub fn current_rate(&self) -> f64 {
        if self.total_steps == 0 {
            return self.learning_rate;
        }
        self.learning_rate * (1.0 - self.step as f64 / self.total_steps as f64).max(0.0)
    }

    /// Applies one update. Parameters are rounded to single precision
    /// afterwards so that saved checkpoints reload to exactly the same model.
    pub fn step(&mut self, params: &mut ModelParams, grads: &ModelParams) {
        let lr = self.current_rate();
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        for (((p, g), m), v) in params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(self.m.tensors_mut())
            .zip(self.v.tensors_mut())
        {
            ndarray::Zip::from(p).and(g).and(m).and(v).for_each(|p, &g, m, v| {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
            });
        }
        params.round_to_f32();
    }
}
