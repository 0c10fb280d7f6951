//! Adam with the epsilon applied to the uncorrected second moment.

use serde::{Deserialize, Serialize};

use super::network::ModelWeights;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainHyper {
    pub learning_rate: f64,
    pub adam_eps: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Seed for minibatch shuffling.
    pub seed: u64,
}

impl Default for TrainHyper {
    fn default() -> Self {
        Self {
            learning_rate: 1e-5,
            adam_eps: 1e-3,
            beta1: 0.9,
            beta2: 0.99,
            batch_size: 2000,
            epochs: 200,
            seed: 0,
        }
    }
}

impl TrainHyper {
    pub fn validate(&self) -> Result<()> {
        let open = |b: f64| b > 0.0 && b < 1.0;
        if !open(self.beta1) || !open(self.beta2) {
            return Err(Error::Config("Adam betas must lie in (0, 1)".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0) || !(self.adam_eps > 0.0) {
            return Err(Error::Config("learning rate and epsilon must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState<T> {
    pub m: ModelWeights<T>,
    pub v: ModelWeights<T>,
    pub step: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(weights: &ModelWeights<T>) -> Self {
        Self { m: weights.zeros_like(), v: weights.zeros_like(), step: 0 }
    }
}

/// One update:
/// `m <- b1 m + (1-b1) g`, `v <- b2 v + (1-b2) g^2`,
/// `w <- w - lr * sqrt(1-b2^t)/(1-b1^t) * m / (sqrt(v) + eps)`.
pub fn adam_step<T: Real>(
    weights: &mut ModelWeights<T>,
    grads: &ModelWeights<T>,
    state: &mut AdamState<T>,
    hyper: &TrainHyper,
) -> Result<()> {
    if !weights.same_shape(grads) || !weights.same_shape(&state.m) || !weights.same_shape(&state.v) {
        return Err(Error::Shape("optimizer state does not match the weights".into()));
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (hyper.beta1, hyper.beta2);
    let lr_t = T::lit(hyper.learning_rate * (1.0 - b2.powi(t)).sqrt() / (1.0 - b1.powi(t)));
    let (b1, b2, eps) = (T::lit(b1), T::lit(b2), T::lit(hyper.adam_eps));
    let one = T::one();
    for (((w, &g), m), v) in weights
        .params_mut()
        .zip(grads.params())
        .zip(state.m.params_mut())
        .zip(state.v.params_mut())
    {
        *m = b1 * *m + (one - b1) * g;
        *v = b2 * *v + (one - b2) * g * g;
        *w -= lr_t * *m / (v.sqrt() + eps);
    }
    Ok(())
}
