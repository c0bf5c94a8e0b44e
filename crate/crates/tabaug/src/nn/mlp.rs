//! Fully connected stacks with explicit backward passes.
//!
//! There is no autodiff graph: every architecture in this crate composes
//! [`Mlp::forward`] caches and walks them backwards by hand, which keeps the
//! gradient path small enough to verify by finite differences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::matrix::Matrix;
use crate::nn::params::{Gradients, ParamStore};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => sigmoid(x),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed in terms of the pre-activation input.
    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
            Activation::Tanh => 1.0 - x.tanh().powi(2),
            Activation::Identity => 1.0,
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// What the final layer's logits are squeezed through.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputActivation {
    Identity,
    Sigmoid,
    /// Independent softmax over consecutive column groups of the given sizes
    /// (one group per categorical feature).
    SoftmaxGroups(Vec<usize>),
}

/// Layer widths `[input, hidden…, output]` plus activations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub widths: Vec<usize>,
    pub activation: Activation,
    pub output: OutputActivation,
}

impl MlpSpec {
    pub fn new(widths: Vec<usize>, activation: Activation, output: OutputActivation) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::Shape("MLP needs at least input and output widths".into()));
        }
        if widths.iter().any(|&w| w == 0) {
            return Err(Error::Shape("MLP widths must be positive".into()));
        }
        if let OutputActivation::SoftmaxGroups(groups) = &output {
            let total: usize = groups.iter().sum();
            if total != *widths.last().unwrap() {
                return Err(Error::Shape(format!(
                    "softmax groups sum to {total}, output width is {}",
                    widths.last().unwrap()
                )));
            }
        }
        Ok(Self { widths, activation, output })
    }

    pub fn input_width(&self) -> usize {
        self.widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.widths.len() - 1
    }
}

/// An MLP bound to a parameter-name prefix inside a [`ParamStore`].
#[derive(Debug, Clone)]
pub struct Mlp {
    pub prefix: String,
    pub spec: MlpSpec,
}

/// Forward-pass cache: per-layer inputs and pre-activations.
#[derive(Debug, Clone)]
pub struct MlpCache {
    inputs: Vec<Matrix>,
    preacts: Vec<Matrix>,
}

impl MlpCache {
    /// Final-layer logits (before the output activation).
    pub fn logits(&self) -> &Matrix {
        self.preacts.last().expect("cache has at least one layer")
    }
}

impl Mlp {
    pub fn new(prefix: impl Into<String>, spec: MlpSpec) -> Self {
        Self { prefix: prefix.into(), spec }
    }

    fn weight_name(&self, layer: usize) -> String {
        format!("{}.w{layer}", self.prefix)
    }

    fn bias_name(&self, layer: usize) -> String {
        format!("{}.b{layer}", self.prefix)
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(&self, store: &mut ParamStore, rng: &mut ChaCha8Rng) {
        for l in 0..self.spec.num_layers() {
            let (fan_in, fan_out) = (self.spec.widths[l], self.spec.widths[l + 1]);
            store.insert_glorot(&self.weight_name(l), fan_in, fan_out, rng);
            store.insert_zeros(&self.bias_name(l), 1, fan_out);
        }
    }

    /// Forward pass returning post-output-activation values and the cache.
    pub fn forward(&self, store: &ParamStore, input: &Matrix) -> Result<(Matrix, MlpCache)> {
        let (logits, cache) = self.forward_logits(store, input)?;
        Ok((apply_output(&self.spec.output, &logits), cache))
    }

    /// Forward pass stopping at the final logits.
    pub fn forward_logits(&self, store: &ParamStore, input: &Matrix) -> Result<(Matrix, MlpCache)> {
        if input.cols != self.spec.input_width() {
            return Err(Error::Shape(format!(
                "input width {} does not match MLP input {}",
                input.cols,
                self.spec.input_width()
            )));
        }
        let layers = self.spec.num_layers();
        let mut inputs = Vec::with_capacity(layers);
        let mut preacts = Vec::with_capacity(layers);
        let mut h = input.clone();
        for l in 0..layers {
            let mut z = h.matmul(store.get(&self.weight_name(l)));
            z.add_row_broadcast(store.get(&self.bias_name(l)));
            inputs.push(h);
            if l + 1 < layers {
                h = z.map(|v| self.spec.activation.apply(v));
            } else {
                h = z.clone();
            }
            preacts.push(z);
        }
        Ok((h, MlpCache { inputs, preacts }))
    }

    /// Backward pass from a gradient w.r.t. the final logits. Accumulates
    /// parameter gradients into `grads` and returns the input gradient.
    pub fn backward_from_logits(
        &self,
        store: &ParamStore,
        cache: &MlpCache,
        dlogits: &Matrix,
        grads: &mut Gradients,
    ) -> Matrix {
        let layers = self.spec.num_layers();
        let mut dz = dlogits.clone();
        for l in (0..layers).rev() {
            grads.add(&self.weight_name(l), cache.inputs[l].t_matmul(&dz));
            grads.add(&self.bias_name(l), dz.col_sums());
            let dh = dz.matmul_t(store.get(&self.weight_name(l)));
            if l > 0 {
                let deriv = cache.preacts[l - 1].map(|v| self.spec.activation.derivative(v));
                dz = dh.hadamard(&deriv);
            } else {
                dz = dh;
            }
        }
        dz
    }
}

/// Apply an output activation to final-layer logits.
pub fn apply_output(output: &OutputActivation, logits: &Matrix) -> Matrix {
    match output {
        OutputActivation::Identity => logits.clone(),
        OutputActivation::Sigmoid => logits.map(sigmoid),
        OutputActivation::SoftmaxGroups(groups) => softmax_groups(logits, groups),
    }
}

/// Row-wise softmax over consecutive column groups, max-subtracted for
/// stability.
pub fn softmax_groups(logits: &Matrix, groups: &[usize]) -> Matrix {
    let mut out = logits.clone();
    for r in 0..out.rows {
        let row = out.row_mut(r);
        let mut start = 0;
        for &g in groups {
            softmax_in_place(&mut row[start..start + g]);
            start += g;
        }
    }
    out
}

pub fn softmax_in_place(slice: &mut [f64]) {
    let max = slice.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in slice.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in slice.iter_mut() {
        *v /= sum;
    }
}

/// Loss heads understood by [`mlp_loss`] / [`mlp_loss_backward`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Sigmoid + binary cross-entropy against {0,1} targets (width 1).
    Bce,
    /// Sum of squared errors per sample, mean over the batch.
    Mse,
    /// KL(N(μ, diag e^logvar) ‖ N(0, I)); logits are `[μ | logvar]`.
    KlGaussian,
    /// Wasserstein critic: mean score of fakes (target 0) minus mean score
    /// of reals (target 1); width 1.
    WganCritic,
}

/// Mean batch loss of `kind` for logits against targets, plus the gradient
/// w.r.t. the logits. `targets` is ignored by `KlGaussian`.
pub fn loss_and_logit_grad(kind: LossKind, logits: &Matrix, targets: &Matrix) -> Result<(f64, Matrix)> {
    let b = logits.rows as f64;
    match kind {
        LossKind::Bce => {
            if logits.cols != 1 || targets.shape() != logits.shape() {
                return Err(Error::Shape("bce expects (B,1) logits and targets".into()));
            }
            let mut loss = 0.0;
            let mut dl = Matrix::zeros(logits.rows, 1);
            for i in 0..logits.rows {
                let z = logits.data[i];
                let y = targets.data[i];
                // log(1+e^z) computed stably
                let softplus = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
                loss += softplus - y * z;
                dl.data[i] = (sigmoid(z) - y) / b;
            }
            Ok((loss / b, dl))
        }
        LossKind::Mse => {
            if targets.shape() != logits.shape() {
                return Err(Error::Shape("mse expects matching shapes".into()));
            }
            let mut loss = 0.0;
            let mut dl = Matrix::zeros(logits.rows, logits.cols);
            for i in 0..logits.data.len() {
                let d = logits.data[i] - targets.data[i];
                loss += d * d;
                dl.data[i] = 2.0 * d / b;
            }
            Ok((loss / b, dl))
        }
        LossKind::KlGaussian => {
            if logits.cols % 2 != 0 {
                return Err(Error::Shape("kl_gaussian expects even output width [mu|logvar]".into()));
            }
            let half = logits.cols / 2;
            let mut loss = 0.0;
            let mut dl = Matrix::zeros(logits.rows, logits.cols);
            for r in 0..logits.rows {
                for c in 0..half {
                    let mu = logits.at(r, c);
                    let lv = logits.at(r, half + c);
                    loss += 0.5 * (mu * mu + lv.exp() - lv - 1.0);
                    *dl.at_mut(r, c) = mu / b;
                    *dl.at_mut(r, half + c) = 0.5 * (lv.exp() - 1.0) / b;
                }
            }
            Ok((loss / b, dl))
        }
        LossKind::WganCritic => {
            if logits.cols != 1 || targets.shape() != logits.shape() {
                return Err(Error::Shape("wgan_critic expects (B,1) scores and targets".into()));
            }
            let n_real = targets.data.iter().filter(|&&y| y == 1.0).count();
            let n_fake = targets.rows - n_real;
            let mut loss = 0.0;
            let mut dl = Matrix::zeros(logits.rows, 1);
            for i in 0..logits.rows {
                if targets.data[i] == 1.0 {
                    loss -= logits.data[i] / n_real.max(1) as f64;
                    dl.data[i] = -1.0 / n_real.max(1) as f64;
                } else {
                    loss += logits.data[i] / n_fake.max(1) as f64;
                    dl.data[i] = 1.0 / n_fake.max(1) as f64;
                }
            }
            Ok((loss, dl))
        }
    }
}

/// Forward + loss for an MLP whose output head matches `kind`.
pub fn mlp_loss(
    store: &ParamStore,
    mlp: &Mlp,
    input: &Matrix,
    targets: &Matrix,
    kind: LossKind,
) -> Result<f64> {
    let (logits, _) = mlp.forward_logits(store, input)?;
    let (loss, _) = loss_and_logit_grad(kind, &logits, targets)?;
    if !loss.is_finite() {
        return Err(Error::NonFinite(format!("{kind:?} loss")));
    }
    Ok(loss)
}

/// Gradients of the mean batch loss w.r.t. every MLP parameter.
pub fn mlp_loss_backward(
    store: &ParamStore,
    mlp: &Mlp,
    input: &Matrix,
    targets: &Matrix,
    kind: LossKind,
) -> Result<(f64, Gradients)> {
    let (logits, cache) = mlp.forward_logits(store, input)?;
    let (loss, dlogits) = loss_and_logit_grad(kind, &logits, targets)?;
    if !loss.is_finite() {
        return Err(Error::NonFinite(format!("{kind:?} loss")));
    }
    let mut grads = Gradients::new();
    mlp.backward_from_logits(store, &cache, &dlogits, &mut grads);
    Ok((loss, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::params::seeded_rng;

    fn mlp(widths: Vec<usize>, act: Activation) -> Mlp {
        Mlp::new("mlp", MlpSpec::new(widths, act, OutputActivation::Identity).unwrap())
    }

    #[test]
    fn zero_weights_zero_bias_relu_gives_zero() {
        let net = mlp(vec![3, 4, 2], Activation::Relu);
        let mut store = ParamStore::new();
        store.insert_zeros("mlp.w0", 3, 4);
        store.insert_zeros("mlp.b0", 1, 4);
        store.insert_zeros("mlp.w1", 4, 2);
        store.insert_zeros("mlp.b1", 1, 2);
        let x = Matrix::from_vec(2, 3, vec![1.0, -2.0, 0.5, 3.0, 0.0, -1.0]);
        let (out, _) = net.forward(&store, &x).unwrap();
        assert!(out.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let net = mlp(vec![3, 3], Activation::Identity);
        let mut store = ParamStore::new();
        store.insert("mlp.w0", Matrix::identity(3));
        store.insert_zeros("mlp.b0", 1, 3);
        let x = Matrix::from_vec(1, 3, vec![0.5, -1.25, 2.0]);
        let (out, _) = net.forward(&store, &x).unwrap();
        assert_eq!(out.data, x.data);
    }

    #[test]
    fn small_net_matches_hand_computation() {
        // 2-3-1 tanh net, weights fixed by hand:
        //   W0 = [[0.1, -0.2, 0.3], [0.4, 0.5, -0.6]], b0 = [0.05, -0.05, 0.1]
        //   W1 = [[0.7], [-0.8], [0.9]],               b1 = [0.2]
        // input x = [1.0, 2.0]:
        //   z0 = [0.95, 0.75, -0.8], h = tanh(z0)
        //   out = 0.7 h0 - 0.8 h1 + 0.9 h2 + 0.2
        let net = mlp(vec![2, 3, 1], Activation::Tanh);
        let mut store = ParamStore::new();
        store.insert("mlp.w0", Matrix::from_vec(2, 3, vec![0.1, -0.2, 0.3, 0.4, 0.5, -0.6]));
        store.insert("mlp.b0", Matrix::from_vec(1, 3, vec![0.05, -0.05, 0.1]));
        store.insert("mlp.w1", Matrix::from_vec(3, 1, vec![0.7, -0.8, 0.9]));
        store.insert("mlp.b1", Matrix::from_vec(1, 1, vec![0.2]));
        let x = Matrix::from_vec(1, 2, vec![1.0, 2.0]);
        let (out, _) = net.forward(&store, &x).unwrap();
        let expected = 0.7 * 0.95f64.tanh() - 0.8 * 0.75f64.tanh() + 0.9 * (-0.8f64).tanh() + 0.2;
        assert!((out.data[0] - expected).abs() < 1e-15, "{} vs {expected}", out.data[0]);
    }

    #[test]
    fn forward_is_bit_reproducible() {
        let net = mlp(vec![4, 8, 3], Activation::Sigmoid);
        let mut store = ParamStore::new();
        let mut rng = seeded_rng(11);
        net.init(&mut store, &mut rng);
        let x = Matrix::from_fn(5, 4, |r, c| ((r * 4 + c) as f64).sin());
        let (a, _) = net.forward(&store, &x).unwrap();
        let (b, _) = net.forward(&store, &x).unwrap();
        assert_eq!(a.data, b.data);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let net = mlp(vec![3, 2], Activation::Relu);
        let mut store = ParamStore::new();
        let mut rng = seeded_rng(0);
        net.init(&mut store, &mut rng);
        let x = Matrix::from_vec(1, 4, vec![0.0; 4]);
        assert!(matches!(net.forward(&store, &x), Err(Error::Shape(_))));
    }

    #[test]
    fn bce_bias_gradient_zero_on_balanced_labels_at_zero_params() {
        let net = mlp(vec![2, 1], Activation::Identity);
        let mut store = ParamStore::new();
        store.insert_zeros("mlp.w0", 2, 1);
        store.insert_zeros("mlp.b0", 1, 1);
        let x = Matrix::from_vec(2, 2, vec![1.0, 2.0, 1.0, 2.0]);
        let y = Matrix::from_vec(2, 1, vec![1.0, 0.0]);
        let (_, grads) = mlp_loss_backward(&store, &net, &x, &y, LossKind::Bce).unwrap();
        let db = grads.get("mlp.b0").unwrap();
        assert!(db.data[0].abs() < 1e-15);
    }

    #[test]
    fn mse_gradient_matches_analytic_linear_case() {
        // y = w·x with x=1, target 0, w=1: L=(w)^2 so dL/dw = 2.
        let net = mlp(vec![1, 1], Activation::Identity);
        let mut store = ParamStore::new();
        store.insert("mlp.w0", Matrix::from_vec(1, 1, vec![1.0]));
        store.insert_zeros("mlp.b0", 1, 1);
        let x = Matrix::from_vec(1, 1, vec![1.0]);
        let y = Matrix::from_vec(1, 1, vec![0.0]);
        let (loss, grads) = mlp_loss_backward(&store, &net, &x, &y, LossKind::Mse).unwrap();
        assert!((loss - 1.0).abs() < 1e-15);
        assert!((grads.get("mlp.w0").unwrap().data[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn kl_of_standard_normal_is_zero() {
        let logits = Matrix::zeros(4, 6); // mu = 0, logvar = 0
        let (loss, grad) = loss_and_logit_grad(LossKind::KlGaussian, &logits, &Matrix::zeros(4, 6)).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.data.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn softmax_groups_sot_to_one() {
        let logits = Matrix::from_vec(2, 5, vec![1.0, 2.0, 3.0, -1.0, 0.5, 0.0, 0.0, 0.0, 4.0, 4.0]);
        let probs = softmax_groups(&logits, &[3, 2]);
        for r in 0..2 {
            let row = probs.row(r);
            assert!((row[..3].iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!((row[3..].iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|&p| p >= 0.0));
        }
    }
}
