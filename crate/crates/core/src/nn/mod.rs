//! Dense-network machinery: two-layer MLP forward/backward, Adam, soft
//! target updates.
//!
//! Everything is written against flat `Vec<S>` storage with explicit loops;
//! no autodiff, no BLAS. Backward passes are exact reverse-mode gradients of
//! the scalar implied by the upstream gradient, with respect to every
//! parameter and to the input vector (the input gradient is what the
//! deterministic policy-gradient chain needs).

mod adam;

pub use adam::{clip_global_norm, AdamState};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CaraError, Result};
use crate::scalar::Scalar;

/// Activation applied to the final layer. Hidden layers are always ReLU.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputActivation {
    /// Raw affine output (critic / value heads).
    Identity,
    /// Bounded output in (-1, 1) (actor heads).
    Tanh,
}

impl OutputActivation {
    pub fn name(self) -> &'static str {
        match self {
            OutputActivation::Identity => "identity",
            OutputActivation::Tanh => "tanh",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(OutputActivation::Identity),
            "tanh" => Ok(OutputActivation::Tanh),
            other => Err(CaraError::InvalidArgument(format!(
                "unknown activation `{other}`"
            ))),
        }
    }
}

/// One fully connected layer. Weights are row-major `[out_dim][in_dim]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer<S> {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<S>,
    pub biases: Vec<S>,
}

/// Fully connected network: affine -> ReLU -> ... -> affine -> output head.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpNet<S> {
    pub layers: Vec<DenseLayer<S>>,
    pub output_activation: OutputActivation,
}

/// Gradients shaped exactly like an [`MlpNet`], plus the gradient with
/// respect to the input vector.
#[derive(Debug, Clone)]
pub struct GradPack<S> {
    pub weights: Vec<Vec<S>>,
    pub biases: Vec<Vec<S>>,
    pub input: Vec<S>,
}

impl<S: Scalar> GradPack<S> {
    /// All-zero gradients for `net`.
    pub fn zeros_like(net: &MlpNet<S>) -> Self {
        GradPack {
            weights: net.layers.iter().map(|l| vec![S::zero(); l.weights.len()]).collect(),
            biases: net.layers.iter().map(|l| vec![S::zero(); l.biases.len()]).collect(),
            input: vec![S::zero(); net.input_dim()],
        }
    }

    /// Multiplies every parameter gradient (not the input gradient) by `k`.
    pub fn scale_params(&mut self, k: S) {
        for w in &mut self.weights {
            for g in w.iter_mut() {
                *g *= k;
            }
        }
        for b in &mut self.biases {
            for g in b.iter_mut() {
                *g *= k;
            }
        }
    }

    /// Euclidean norm over all parameter gradients.
    pub fn param_norm(&self) -> S {
        let mut sq = S::zero();
        for w in &self.weights {
            for &g in w.iter() {
                sq += g * g;
            }
        }
        for b in &self.biases {
            for &g in b.iter() {
                sq += g * g;
            }
        }
        sq.sqrt()
    }

    pub fn reset(&mut self) {
        for w in &mut self.weights {
            w.iter_mut().for_each(|g| *g = S::zero());
        }
        for b in &mut self.biases {
            b.iter_mut().for_each(|g| *g = S::zero());
        }
        self.input.iter_mut().for_each(|g| *g = S::zero());
    }
}

/// Reusable forward/backward buffers for one network shape.
#[derive(Debug, Clone, Default)]
pub struct Scratch<S> {
    /// `acts[0]` is the input, `acts[l+1]` the post-activation output of
    /// layer `l`.
    acts: Vec<Vec<S>>,
    delta: Vec<S>,
    delta_prev: Vec<S>,
}

impl<S: Scalar> Scratch<S> {
    pub fn new() -> Self {
        Scratch {
            acts: Vec::new(),
            delta: Vec::new(),
            delta_prev: Vec::new(),
        }
    }

    /// Network output after the last `forward_scratch` call.
    pub fn output(&self) -> &[S] {
        self.acts.last().expect("forward_scratch must run first")
    }
}

fn relu<S: Scalar>(x: S) -> S {
    if x > S::zero() {
        x
    } else {
        S::zero()
    }
}

impl<S: Scalar> MlpNet<S> {
    /// Builds a network with Glorot-uniform weights and zero biases.
    ///
    /// `dims` lists layer widths input-first, e.g. `[2, 64, 32, 17]`.
    pub fn init(dims: &[usize], output_activation: OutputActivation, seed: u64) -> Result<Self> {
        if dims.len() < 2 {
            return Err(CaraError::InvalidArgument(format!(
                "network needs at least input and output dims, got {dims:?}"
            )));
        }
        if let Some(&bad) = dims.iter().find(|&&d| d == 0) {
            return Err(CaraError::InvalidArgument(format!(
                "network dimension must be positive, got {bad} in {dims:?}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for pair in dims.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let weights = (0..fan_in * fan_out)
                .map(|_| S::c((rng.gen::<f64>() * 2.0 - 1.0) * limit))
                .collect();
            layers.push(DenseLayer {
                in_dim: fan_in,
                out_dim: fan_out,
                weights,
                biases: vec![S::zero(); fan_out],
            });
        }
        Ok(MlpNet {
            layers,
            output_activation,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.in_dim)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out_dim)
    }

    /// Layer widths input-first, the inverse of the `dims` passed to `init`.
    pub fn dims(&self) -> Vec<usize> {
        let mut d = Vec::with_capacity(self.layers.len() + 1);
        d.push(self.input_dim());
        d.extend(self.layers.iter().map(|l| l.out_dim));
        d
    }

    /// Two nets have the same shape iff dims and head agree.
    pub fn same_shape(&self, other: &Self) -> bool {
        self.output_activation == other.output_activation && self.dims() == other.dims()
    }

    /// Pure forward pass.
    pub fn forward(&self, input: &[S]) -> Result<Vec<S>> {
        let mut scratch = Scratch::new();
        self.forward_scratch(input, &mut scratch)?;
        Ok(scratch.output().to_vec())
    }

    /// Forward pass into reusable buffers; the output lives in
    /// `scratch.output()`.
    pub fn forward_scratch(&self, input: &[S], scratch: &mut Scratch<S>) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(CaraError::Shape {
                context: "mlp forward input".into(),
                expected: self.input_dim(),
                actual: input.len(),
            });
        }
        scratch.acts.resize(self.layers.len() + 1, Vec::new());
        scratch.acts[0].clear();
        scratch.acts[0].extend_from_slice(input);
        for (l, layer) in self.layers.iter().enumerate() {
            let (before, after) = scratch.acts.split_at_mut(l + 1);
            let x = &before[l];
            let y = &mut after[0];
            y.clear();
            y.resize(layer.out_dim, S::zero());
            let last = l + 1 == self.layers.len();
            for i in 0..layer.out_dim {
                let row = &layer.weights[i * layer.in_dim..(i + 1) * layer.in_dim];
                let mut acc = layer.biases[i];
                for (w, v) in row.iter().zip(x.iter()) {
                    acc += *w * *v;
                }
                y[i] = if last {
                    match self.output_activation {
                        OutputActivation::Identity => acc,
                        OutputActivation::Tanh => acc.tanh(),
                    }
                } else {
                    relu(acc)
                };
            }
        }
        Ok(())
    }

    /// Exact reverse-mode gradients of the scalar `J` implied by
    /// `upstream = dJ/d(output)`, with respect to all parameters and the
    /// input.
    pub fn backward(&self, input: &[S], upstream: &[S]) -> Result<GradPack<S>> {
        let mut scratch = Scratch::new();
        self.forward_scratch(input, &mut scratch)?;
        let mut grads = GradPack::zeros_like(self);
        let input_dim = self.input_dim();
        let mut input_grad = vec![S::zero(); input_dim];
        self.backprop_scratch(upstream, &mut scratch, Some(&mut grads), Some((0, &mut input_grad)))?;
        grads.input = input_grad;
        Ok(grads)
    }

    /// Backward pass over buffers filled by `forward_scratch`.
    ///
    /// `grads`, when given, is accumulated into (`+=`), which is how batch
    /// updates average per-sample contributions. `input_grad`, when given,
    /// receives `dJ/d(input[offset..offset+len])` (also accumulated), so the
    /// policy-gradient chain can ask for just one agent's action block.
    pub fn backprop_scratch(
        &self,
        upstream: &[S],
        scratch: &mut Scratch<S>,
        mut grads: Option<&mut GradPack<S>>,
        mut input_grad: Option<(usize, &mut [S])>,
    ) -> Result<()> {
        if upstream.len() != self.output_dim() {
            return Err(CaraError::Shape {
                context: "mlp backward upstream".into(),
                expected: self.output_dim(),
                actual: upstream.len(),
            });
        }
        if scratch.acts.len() != self.layers.len() + 1 {
            return Err(CaraError::InvalidArgument(
                "backprop_scratch requires a prior forward_scratch".into(),
            ));
        }

        // Output-head local derivative.
        let out = scratch.acts.last().expect("forward ran");
        scratch.delta.clear();
        scratch.delta.extend(upstream.iter().zip(out.iter()).map(|(&u, &y)| {
            match self.output_activation {
                OutputActivation::Identity => u,
                OutputActivation::Tanh => u * (S::one() - y * y),
            }
        }));

        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let x = &scratch.acts[l];

            if let Some(g) = grads.as_deref_mut() {
                let dw = &mut g.weights[l];
                let db = &mut g.biases[l];
                for i in 0..layer.out_dim {
                    let d = scratch.delta[i];
                    if d != S::zero() {
                        let row = &mut dw[i * layer.in_dim..(i + 1) * layer.in_dim];
                        for (gw, &v) in row.iter_mut().zip(x.iter()) {
                            *gw += d * v;
                        }
                    }
                    db[i] += d;
                }
            }

            if l > 0 {
                // dx for the previous layer, masked by its ReLU.
                scratch.delta_prev.clear();
                scratch.delta_prev.resize(layer.in_dim, S::zero());
                for i in 0..layer.out_dim {
                    let d = scratch.delta[i];
                    if d != S::zero() {
                        let row = &layer.weights[i * layer.in_dim..(i + 1) * layer.in_dim];
                        for (acc, &w) in scratch.delta_prev.iter_mut().zip(row.iter()) {
                            *acc += d * w;
                        }
                    }
                }
                for (dp, &a) in scratch.delta_prev.iter_mut().zip(x.iter()) {
                    if a <= S::zero() {
                        *dp = S::zero();
                    }
                }
                std::mem::swap(&mut scratch.delta, &mut scratch.delta_prev);
            } else if let Some((offset, out_slice)) = input_grad.as_mut() {
                // dJ/d(input) restricted to the requested window.
                for (j, slot) in out_slice.iter_mut().enumerate() {
                    let col = *offset + j;
                    let mut acc = S::zero();
                    for i in 0..layer.out_dim {
                        acc += scratch.delta[i] * layer.weights[i * layer.in_dim + col];
                    }
                    *slot += acc;
                }
            }
        }
        Ok(())
    }
}

/// Elementwise convex blend `target <- tau * behavior + (1 - tau) * target`.
///
/// `tau = 1` makes the target an exact copy, `tau = 0` leaves it untouched.
pub fn soft_update<S: Scalar>(target: &mut MlpNet<S>, behavior: &MlpNet<S>, tau: S) -> Result<()> {
    if tau < S::zero() || tau > S::one() {
        return Err(CaraError::InvalidArgument(format!(
            "soft update tau must lie in [0, 1], got {tau}"
        )));
    }
    if !target.same_shape(behavior) {
        return Err(CaraError::Shape {
            context: "soft_update nets".into(),
            expected: behavior.layers.len(),
            actual: target.layers.len(),
        });
    }
    let keep = S::one() - tau;
    for (t, b) in target.layers.iter_mut().zip(behavior.layers.iter()) {
        for (tw, &bw) in t.weights.iter_mut().zip(b.weights.iter()) {
            *tw = tau * bw + keep * *tw;
        }
        for (tb, &bb) in t.biases.iter_mut().zip(b.biases.iter()) {
            *tb = tau * bb + keep * *tb;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn linear_1x1(w: f64, b: f64) -> MlpNet<f64> {
        MlpNet {
            layers: vec![DenseLayer {
                in_dim: 1,
                out_dim: 1,
                weights: vec![w],
                biases: vec![b],
            }],
            output_activation: OutputActivation::Identity,
        }
    }

    #[test]
    fn init_is_deterministic_per_seed() {
        let a = MlpNet::<f64>::init(&[2, 64, 32, 5], OutputActivation::Tanh, 1).unwrap();
        let b = MlpNet::<f64>::init(&[2, 64, 32, 5], OutputActivation::Tanh, 1).unwrap();
        assert_eq!(a, b);
        let c = MlpNet::<f64>::init(&[2, 64, 32, 5], OutputActivation::Tanh, 2).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn init_biases_are_zero() {
        let net = MlpNet::<f64>::init(&[3, 8, 2], OutputActivation::Identity, 9).unwrap();
        for layer in &net.layers {
            assert!(layer.biases.iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn init_rejects_zero_dim() {
        assert!(MlpNet::<f64>::init(&[2, 0, 5], OutputActivation::Identity, 0).is_err());
        assert!(MlpNet::<f64>::init(&[4], OutputActivation::Identity, 0).is_err());
    }

    #[test]
    fn forward_zero_net_is_zero() {
        let mut net = MlpNet::<f64>::init(&[3, 4, 2], OutputActivation::Identity, 3).unwrap();
        for l in &mut net.layers {
            l.weights.iter_mut().for_each(|w| *w = 0.0);
        }
        assert_eq!(net.forward(&[1.0, -2.0, 0.5]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn forward_single_affine() {
        let net = linear_1x1(2.0, 1.0);
        assert_eq!(net.forward(&[3.0]).unwrap(), vec![7.0]);
    }

    #[test]
    fn forward_rejects_bad_length() {
        let net = linear_1x1(2.0, 1.0);
        assert!(net.forward(&[3.0, 4.0]).is_err());
    }

    #[test]
    fn tanh_head_bounds_outputs() {
        let net = MlpNet::<f64>::init(&[4, 16, 8, 6], OutputActivation::Tanh, 11).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let x: Vec<f64> = (0..4).map(|_| rng.gen::<f64>() * 6.0 - 3.0).collect();
            for y in net.forward(&x).unwrap() {
                assert!(y > -1.0 && y < 1.0);
            }
        }
    }

    #[test]
    fn forward_is_pure() {
        let net = MlpNet::<f64>::init(&[2, 64, 32, 3], OutputActivation::Tanh, 17).unwrap();
        let x = [0.3, -0.8];
        let a = net.forward(&x).unwrap();
        for _ in 0..10 {
            assert_eq!(net.forward(&x).unwrap(), a);
        }
    }

    #[test]
    fn backward_product_rule_on_linear_net() {
        let net = linear_1x1(2.5, 0.0);
        let g = net.backward(&[3.0], &[1.0]).unwrap();
        assert_eq!(g.weights[0][0], 3.0); // dJ/dw = x
        assert_eq!(g.input[0], 2.5); // dJ/dx = w
        assert_eq!(g.biases[0][0], 1.0);
    }

    #[test]
    fn backward_zero_upstream_is_zero() {
        let net = MlpNet::<f64>::init(&[3, 8, 4], OutputActivation::Tanh, 2).unwrap();
        let g = net.backward(&[0.1, 0.2, 0.3], &[0.0; 4]).unwrap();
        assert!(g.weights.iter().flatten().all(|&v| v == 0.0));
        assert!(g.biases.iter().flatten().all(|&v| v == 0.0));
        assert!(g.input.iter().all(|&v| v == 0.0));
    }

    /// Central finite differences of the scalar J = sum(upstream * output).
    fn fd_weight_grad(net: &MlpNet<f64>, x: &[f64], up: &[f64], l: usize, k: usize) -> f64 {
        let h = 1e-5;
        let mut plus = net.clone();
        plus.layers[l].weights[k] += h;
        let mut minus = net.clone();
        minus.layers[l].weights[k] -= h;
        let jp: f64 = plus.forward(x).unwrap().iter().zip(up).map(|(y, u)| y * u).sum();
        let jm: f64 = minus.forward(x).unwrap().iter().zip(up).map(|(y, u)| y * u).sum();
        (jp - jm) / (2.0 * h)
    }

    fn fd_input_grad(net: &MlpNet<f64>, x: &[f64], up: &[f64], j: usize) -> f64 {
        let h = 1e-5;
        let mut xp = x.to_vec();
        xp[j] += h;
        let mut xm = x.to_vec();
        xm[j] -= h;
        let jp: f64 = net.forward(&xp).unwrap().iter().zip(up).map(|(y, u)| y * u).sum();
        let jm: f64 = net.forward(&xm).unwrap().iter().zip(up).map(|(y, u)| y * u).sum();
        (jp - jm) / (2.0 * h)
    }

    #[test]
    fn backward_matches_finite_differences() {
        for (seed, act) in [(1u64, OutputActivation::Identity), (2, OutputActivation::Tanh)] {
            let net = MlpNet::<f64>::init(&[3, 6, 4, 2], act, seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
            let x: Vec<f64> = (0..3).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
            let up: Vec<f64> = (0..2).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
            let g = net.backward(&x, &up).unwrap();
            for l in 0..net.layers.len() {
                for k in 0..net.layers[l].weights.len() {
                    let fd = fd_weight_grad(&net, &x, &up, l, k);
                    assert_relative_eq!(g.weights[l][k], fd, max_relative = 1e-4, epsilon = 1e-6);
                }
            }
            for j in 0..3 {
                let fd = fd_input_grad(&net, &x, &up, j);
                assert_relative_eq!(g.input[j], fd, max_relative = 1e-4, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn input_grad_window_matches_full_backward() {
        let net = MlpNet::<f64>::init(&[6, 8, 3], OutputActivation::Identity, 21).unwrap();
        let x = [0.1, -0.4, 0.9, 0.2, -0.7, 0.5];
        let up = [1.0, -2.0, 0.5];
        let full = net.backward(&x, &up).unwrap();
        let mut scratch = Scratch::new();
        net.forward_scratch(&x, &mut scratch).unwrap();
        let mut window = [0.0; 3];
        net.backprop_scratch(&up, &mut scratch, None, Some((2, &mut window))).unwrap();
        assert_eq!(&full.input[2..5], &window);
    }

    #[test]
    fn soft_update_stays_elementwise_between() {
        use proptest::prelude::*;
        let mut runner = proptest::test_runner::TestRunner::default();
        runner
            .run(&(0.0f64..=1.0), |tau| {
                let behavior = MlpNet::<f64>::init(&[3, 5, 2], OutputActivation::Tanh, 31).unwrap();
                let mut target = MlpNet::<f64>::init(&[3, 5, 2], OutputActivation::Tanh, 32).unwrap();
                let before = target.clone();
                soft_update(&mut target, &behavior, tau).unwrap();
                for (l, layer) in target.layers.iter().enumerate() {
                    for (k, &w) in layer.weights.iter().enumerate() {
                        let a = before.layers[l].weights[k];
                        let b = behavior.layers[l].weights[k];
                        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                        prop_assert!(w >= lo - 1e-15 && w <= hi + 1e-15);
                    }
                }
                Ok(())
            })
            .unwrap();
    }

    #[test]
    fn soft_update_blend_and_extremes() {
        let behavior = MlpNet::<f64>::init(&[2, 4, 2], OutputActivation::Tanh, 7).unwrap();
        let mut target = MlpNet::<f64>::init(&[2, 4, 2], OutputActivation::Tanh, 8).unwrap();

        let mut zero = target.clone();
        for l in &mut zero.layers {
            l.weights.iter_mut().for_each(|w| *w = 0.0);
        }
        let mut ones = behavior.clone();
        for l in &mut ones.layers {
            l.weights.iter_mut().for_each(|w| *w = 1.0);
            l.biases.iter_mut().for_each(|b| *b = 1.0);
        }
        let mut blended = zero.clone();
        soft_update(&mut blended, &ones, 0.05).unwrap();
        for l in &blended.layers {
            assert!(l.weights.iter().all(|&w| w == 0.05));
        }

        let snapshot = target.clone();
        soft_update(&mut target, &behavior, 0.0).unwrap();
        assert_eq!(target, snapshot);
        soft_update(&mut target, &behavior, 1.0).unwrap();
        assert_eq!(target, behavior);

        assert!(soft_update(&mut target, &behavior, 1.5).is_err());
        assert!(soft_update(&mut target, &behavior, -0.1).is_err());
    }
}
