//! Adam optimizer with bias correction, plus global-norm gradient clipping.

use crate::error::{CaraError, Result};
use crate::nn::{GradPack, MlpNet};
use crate::scalar::Scalar;

/// Default first-moment decay.
pub const ADAM_BETA1: f64 = 0.9;
/// Default second-moment decay.
pub const ADAM_BETA2: f64 = 0.999;
/// Default denominator stabilizer.
pub const ADAM_EPSILON: f64 = 1e-8;

/// Optimizer state shaped like one network.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<S> {
    pub step: u64,
    pub learning_rate: S,
    pub beta1: S,
    pub beta2: S,
    pub epsilon: S,
    pub m_weights: Vec<Vec<S>>,
    pub v_weights: Vec<Vec<S>>,
    pub m_biases: Vec<Vec<S>>,
    pub v_biases: Vec<Vec<S>>,
}

impl<S: Scalar> AdamState<S> {
    /// Zeroed accumulators for `net` with the given learning rate.
    pub fn new(net: &MlpNet<S>, learning_rate: S) -> Self {
        let w_zeros: Vec<Vec<S>> =
            net.layers.iter().map(|l| vec![S::zero(); l.weights.len()]).collect();
        let b_zeros: Vec<Vec<S>> =
            net.layers.iter().map(|l| vec![S::zero(); l.biases.len()]).collect();
        AdamState {
            step: 0,
            learning_rate,
            beta1: S::c(ADAM_BETA1),
            beta2: S::c(ADAM_BETA2),
            epsilon: S::c(ADAM_EPSILON),
            m_weights: w_zeros.clone(),
            v_weights: w_zeros,
            m_biases: b_zeros.clone(),
            v_biases: b_zeros,
        }
    }

    /// One bias-corrected Adam step. Rejects NaN/inf gradients.
    pub fn apply(&mut self, net: &mut MlpNet<S>, grads: &GradPack<S>) -> Result<()> {
        for (l, layer) in net.layers.iter().enumerate() {
            if grads.weights[l].len() != layer.weights.len()
                || grads.biases[l].len() != layer.biases.len()
            {
                return Err(CaraError::Shape {
                    context: format!("adam_step layer {l}"),
                    expected: layer.weights.len(),
                    actual: grads.weights[l].len(),
                });
            }
        }
        let finite = grads.weights.iter().flatten().all(|g| g.is_finite())
            && grads.biases.iter().flatten().all(|g| g.is_finite());
        if !finite {
            return Err(CaraError::NonFinite("adam_step gradients".into()));
        }

        self.step += 1;
        let t = self.step as i32;
        let bc1 = S::one() - self.beta1.powi(t);
        let bc2 = S::one() - self.beta2.powi(t);

        for (l, layer) in net.layers.iter_mut().enumerate() {
            update_slice(
                &mut layer.weights,
                &grads.weights[l],
                &mut self.m_weights[l],
                &mut self.v_weights[l],
                self.learning_rate,
                self.beta1,
                self.beta2,
                self.epsilon,
                bc1,
                bc2,
            );
            update_slice(
                &mut layer.biases,
                &grads.biases[l],
                &mut self.m_biases[l],
                &mut self.v_biases[l],
                self.learning_rate,
                self.beta1,
                self.beta2,
                self.epsilon,
                bc1,
                bc2,
            );
        }
        Ok(())
    }
}

#[allow(clippy::too_many_arguments)]
fn update_slice<S: Scalar>(
    params: &mut [S],
    grads: &[S],
    m: &mut [S],
    v: &mut [S],
    lr: S,
    beta1: S,
    beta2: S,
    eps: S,
    bc1: S,
    bc2: S,
) {
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = beta1 * m[i] + (S::one() - beta1) * g;
        v[i] = beta2 * v[i] + (S::one() - beta2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        params[i] = params[i] - lr * m_hat / (v_hat.sqrt() + eps);
    }
}

/// Scales the parameter gradients so their global Euclidean norm does not
/// exceed `max_norm`; returns the pre-clip norm. The input gradient is left
/// alone.
pub fn clip_global_norm<S: Scalar>(grads: &mut GradPack<S>, max_norm: S) -> S {
    let norm = grads.param_norm();
    if norm > max_norm && norm > S::zero() {
        grads.scale_params(max_norm / norm);
    }
    norm
}
