//! From-scratch multilayer perceptron: forward map, MSE loss, reverse-mode
//! gradients, Adam, the offline training loop and checkpointing.
//!
//! The detector instance used throughout the crate is the
//! [256, 500, 250, 120, 64] stack with ReLU on the three hidden layers and
//! a logistic sigmoid on the output, trained on received-frame features
//! against transmitted-bit labels under the mean squared error.
//!
//! Batches travel as row-major (batch x width) matrices so the heavy work
//! is three dense products per layer, all deterministic regardless of the
//! thread count (see `numerics::RMat`).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{RMat, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
        }
    }

    /// Derivative expressed through the activation output.
    #[inline]
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
        }
    }
}

/// Fully connected network. `weights[l]` has shape (fan_in x fan_out) so a
/// batch propagates as `A_{l+1} = act(A_l W_l + b_l)`.
#[derive(Debug, Clone)]
pub struct MlpModel {
    layer_sizes: Vec<usize>,
    weights: Vec<RMat>,
    biases: Vec<Vec<f64>>,
    activations: Vec<Activation>,
}

impl MlpModel {
    /// Gaussian init scaled by 1/sqrt(fan_in), zero biases.
    pub fn init(layer_sizes: &[usize], activations: &[Activation], rng: &mut RngStream) -> Self {
        assert!(layer_sizes.len() >= 2);
        assert_eq!(activations.len(), layer_sizes.len() - 1);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..layer_sizes.len() - 1 {
            let (fan_in, fan_out) = (layer_sizes[l], layer_sizes[l + 1]);
            let scale = 1.0 / (fan_in as f64).sqrt();
            weights.push(RMat::from_fn(fan_in, fan_out, |_, _| {
                scale * rng.standard_normal()
            }));
            biases.push(vec![0.0; fan_out]);
        }
        Self {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
            activations: activations.to_vec(),
        }
    }

    /// The full-scale detector head: three ReLU hidden layers of 500, 250
    /// and 120 neurons and a sigmoid output.
    pub fn detector(input: usize, hidden: &[usize], output: usize, rng: &mut RngStream) -> Self {
        let mut sizes = vec![input];
        sizes.extend_from_slice(hidden);
        sizes.push(output);
        let mut acts = vec![Activation::Relu; hidden.len()];
        acts.push(Activation::Sigmoid);
        Self::init(&sizes, &acts, rng)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_size(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn weight(&self, layer: usize) -> &RMat {
        &self.weights[layer]
    }

    /// Mutable parameter access, for external probes (finite-difference
    /// checks live outside this module).
    pub fn weight_mut(&mut self, layer: usize) -> &mut RMat {
        &mut self.weights[layer]
    }

    pub fn bias(&self, layer: usize) -> &[f64] {
        &self.biases[layer]
    }

    pub fn parameter_count(&self) -> usize {
        self.weights
            .iter()
            .map(|w| w.rows() * w.cols())
            .sum::<usize>()
            + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    /// Forward pass for one feature vector.
    pub fn forward(&self, features: &[f64]) -> Result<Vec<f64>> {
        if features.len() != self.input_size() {
            return Err(Error::DimMismatch(format!(
                "feature length {} vs input layer {}",
                features.len(),
                self.input_size()
            )));
        }
        let batch = RMat::from_vec(1, features.len(), features.to_vec());
        let out = self.forward_batch(&batch);
        Ok(out.data().to_vec())
    }

    /// Forward pass for a (batch x input) matrix.
    pub fn forward_batch(&self, features: &RMat) -> RMat {
        let mut a = features.clone();
        for l in 0..self.weights.len() {
            a = self.layer_forward(l, &a);
        }
        a
    }

    fn layer_forward(&self, l: usize, a: &RMat) -> RMat {
        let mut z = a.matmul(&self.weights[l]);
        let bias = &self.biases[l];
        let act = self.activations[l];
        for r in 0..z.rows() {
            let row = z.row_mut(r);
            for (v, &b) in row.iter_mut().zip(bias) {
                *v = act.apply(*v + b);
            }
        }
        z
    }

    /// Forward with all post-activation layers kept for backprop.
    fn forward_cached(&self, features: &RMat) -> Vec<RMat> {
        let mut acts = Vec::with_capacity(self.weights.len() + 1);
        acts.push(features.clone());
        for l in 0..self.weights.len() {
            let next = self.layer_forward(l, acts.last().unwrap());
            acts.push(next);
        }
        acts
    }

    /// Hard decisions: output > 0.5 maps to bit 1, everything else (ties
    /// included) to 0.
    pub fn detect(&self, features: &[f64]) -> Result<Vec<u8>> {
        Ok(self
            .forward(features)?
            .into_iter()
            .map(|v| if v > 0.5 { 1 } else { 0 })
            .collect())
    }
}

/// Mean squared error averaged over batch and output dimension.
pub fn mse_loss(predictions: &RMat, labels: &RMat) -> Result<f64> {
    if predictions.rows() != labels.rows() || predictions.cols() != labels.cols() {
        return Err(Error::DimMismatch("loss shapes".into()));
    }
    if predictions.rows() == 0 {
        return Err(Error::EmptyInput("mse_loss"));
    }
    let n = (predictions.rows() * predictions.cols()) as f64;
    Ok(predictions
        .data()
        .iter()
        .zip(labels.data())
        .map(|(p, y)| (p - y) * (p - y))
        .sum::<f64>()
        / n)
}

/// Per-layer gradients, same shapes as the parameters.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub weights: Vec<RMat>,
    pub biases: Vec<Vec<f64>>,
}

/// Reverse-mode gradients of the batch MSE. Returns the loss along with
/// the gradients so the training loop gets both from one pass.
pub fn backward(model: &MlpModel, features: &RMat, labels: &RMat) -> Result<(f64, Gradients)> {
    if features.rows() == 0 {
        return Err(Error::EmptyInput("backward"));
    }
    let acts = model.forward_cached(features);
    let output = acts.last().unwrap();
    let loss = mse_loss(output, labels)?;

    let batch = features.rows() as f64;
    let width = model.output_size() as f64;
    let scale = 2.0 / (batch * width);

    let layers = model.weights.len();
    let mut grad_w = Vec::with_capacity(layers);
    let mut grad_b = Vec::with_capacity(layers);

    // delta at the output: dL/dz = scale * (a - y) .* act'(a)
    let mut delta = RMat::zeros(output.rows(), output.cols());
    {
        let act = model.activations[layers - 1];
        let d = delta.data_mut();
        for (i, (&a, &y)) in output.data().iter().zip(labels.data()).enumerate() {
            d[i] = scale * (a - y) * act.derivative_from_output(a);
        }
    }

    for l in (0..layers).rev() {
        let gw = acts[l].transpose().matmul(&delta);
        let mut gb = vec![0.0; model.biases[l].len()];
        for r in 0..delta.rows() {
            for (acc, &v) in gb.iter_mut().zip(delta.row(r)) {
                *acc += v;
            }
        }
        if l > 0 {
            // delta W^T via an explicit transpose: the contiguous product
            // kernel is several times faster than the dot-product form and
            // the copy is cheap next to the GEMM.
            let mut prev = delta.matmul(&model.weights[l].transpose());
            let act = model.activations[l - 1];
            let a_prev = acts[l].data();
            debug_assert_eq!(prev.data().len(), acts[l].data().len());
            let p = prev.data_mut();
            for (i, &a) in a_prev.iter().enumerate() {
                p[i] *= act.derivative_from_output(a);
            }
            delta = prev;
        }
        grad_w.push(gw);
        grad_b.push(gb);
    }
    grad_w.reverse();
    grad_b.reverse();
    Ok((
        loss,
        Gradients {
            weights: grad_w,
            biases: grad_b,
        },
    ))
}

/// Adam hyperparameters and the training schedule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 1000,
            batch_size: 1000,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
        }
    }
}

/// First/second-moment state of Adam.
#[derive(Debug, Clone)]
pub struct AdamState {
    m_w: Vec<RMat>,
    v_w: Vec<RMat>,
    m_b: Vec<Vec<f64>>,
    v_b: Vec<Vec<f64>>,
    step: u64,
}

impl AdamState {
    pub fn new(model: &MlpModel) -> Self {
        Self {
            m_w: model
                .weights
                .iter()
                .map(|w| RMat::zeros(w.rows(), w.cols()))
                .collect(),
            v_w: model
                .weights
                .iter()
                .map(|w| RMat::zeros(w.rows(), w.cols()))
                .collect(),
            m_b: model.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
            v_b: model.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
            step: 0,
        }
    }
}

/// One bias-corrected Adam update. Rejects non-finite gradients.
pub fn adam_step(
    model: &mut MlpModel,
    grads: &Gradients,
    state: &mut AdamState,
    cfg: &TrainConfig,
) -> Result<()> {
    for (l, g) in grads.weights.iter().enumerate() {
        if !g.is_finite() || !grads.biases[l].iter().all(|v| v.is_finite()) {
            return Err(Error::NanGradient(format!("layer {l}")));
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let lr = cfg.learning_rate * (1.0 - cfg.beta2.powi(t)).sqrt() / (1.0 - cfg.beta1.powi(t));
    for l in 0..model.weights.len() {
        let m = state.m_w[l].data_mut();
        let v = state.v_w[l].data_mut();
        let w = model.weights[l].data_mut();
        for (i, &g) in grads.weights[l].data().iter().enumerate() {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
            w[i] -= lr * m[i] / (v[i].sqrt() + cfg.epsilon);
        }
        let mb = &mut state.m_b[l];
        let vb = &mut state.v_b[l];
        let b = &mut model.biases[l];
        for (i, &g) in grads.biases[l].iter().enumerate() {
            mb[i] = cfg.beta1 * mb[i] + (1.0 - cfg.beta1) * g;
            vb[i] = cfg.beta2 * vb[i] + (1.0 - cfg.beta2) * g * g;
            b[i] -= lr * mb[i] / (vb[i].sqrt() + cfg.epsilon);
        }
    }
    Ok(())
}

/// Supervised pairs, rows aligned between the two matrices.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub features: RMat,
    pub labels: RMat,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.rows() == 0
    }
}

/// Offline minibatch training with per-epoch seeded shuffling. Returns the
/// trained model and the per-epoch mean training loss. Aborts on a loss
/// above 1e3 or any non-finite gradient.
pub fn train(
    model: &mut MlpModel,
    data: &Dataset,
    cfg: &TrainConfig,
) -> Result<Vec<f64>> {
    if data.is_empty() {
        return Err(Error::EmptyInput("train"));
    }
    assert!(cfg.batch_size >= 1 && cfg.batch_size <= data.len());
    let n = data.len();
    let width = data.features.cols();
    let lwidth = data.labels.cols();
    let mut order: Vec<usize> = (0..n).collect();
    let mut state = AdamState::new(model);
    let mut curve = Vec::with_capacity(cfg.epochs);
    let mut shuffle_rng = RngStream::new(cfg.seed, 0xC0FF_EE00);

    for _epoch in 0..cfg.epochs {
        shuffle_rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        let mut seen = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let mut bx = RMat::zeros(chunk.len(), width);
            let mut by = RMat::zeros(chunk.len(), lwidth);
            for (r, &idx) in chunk.iter().enumerate() {
                bx.row_mut(r).copy_from_slice(data.features.row(idx));
                by.row_mut(r).copy_from_slice(data.labels.row(idx));
            }
            let (loss, grads) = backward(model, &bx, &by)?;
            if !loss.is_finite() || loss > 1e3 {
                return Err(Error::Divergence(format!("loss {loss}")));
            }
            adam_step(model, &grads, &mut state, cfg)?;
            epoch_loss += loss * chunk.len() as f64;
            seen += chunk.len();
        }
        curve.push(epoch_loss / seen as f64);
    }
    Ok(curve)
}

/// Build the detector feature vector from a received frame grid: per OFDM
/// symbol, all real parts then all imaginary parts, symbols in order.
pub fn frame_features(grid: &crate::numerics::CMat) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * grid.rows() * grid.cols());
    for s in 0..grid.rows() {
        out.extend(grid.row(s).iter().map(|v| v.re));
        out.extend(grid.row(s).iter().map(|v| v.im));
    }
    out
}

/// Feature layout helper for callers that need the width up front.
pub fn feature_width(symbols: usize, n_subcarriers: usize) -> usize {
    2 * symbols * n_subcarriers
}

pub use checkpoint::{load_checkpoint, save_checkpoint};

mod checkpoint {
    use super::*;
    use std::path::Path;

    /// Self-describing checkpoint: layer sizes, activation tags and the
    /// 64-bit parameters in document order.
    #[derive(Serialize, Deserialize)]
    struct Doc {
        format: String,
        layer_sizes: Vec<usize>,
        activations: Vec<Activation>,
        weights: Vec<Vec<f64>>,
        biases: Vec<Vec<f64>>,
    }

    pub fn save_checkpoint(model: &MlpModel, path: &Path) -> Result<()> {
        let doc = Doc {
            format: "mlp-v1".to_string(),
            layer_sizes: model.layer_sizes.clone(),
            activations: model.activations.clone(),
            weights: model.weights.iter().map(|w| w.data().to_vec()).collect(),
            biases: model.biases.clone(),
        };
        let json = serde_json::to_string(&doc)
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load_checkpoint(path: &Path) -> Result<MlpModel> {
        let json = std::fs::read_to_string(path)?;
        let doc: Doc =
            serde_json::from_str(&json).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if doc.format != "mlp-v1" {
            return Err(Error::Checkpoint(format!("unknown format {}", doc.format)));
        }
        if doc.layer_sizes.len() < 2
            || doc.activations.len() != doc.layer_sizes.len() - 1
            || doc.weights.len() != doc.activations.len()
            || doc.biases.len() != doc.activations.len()
        {
            return Err(Error::Checkpoint("inconsistent layer structure".into()));
        }
        let mut weights = Vec::new();
        for (l, data) in doc.weights.into_iter().enumerate() {
            let (r, c) = (doc.layer_sizes[l], doc.layer_sizes[l + 1]);
            if data.len() != r * c || doc.biases[l].len() != c {
                return Err(Error::Checkpoint(format!("layer {l} shape mismatch")));
            }
            weights.push(RMat::from_vec(r, c, data));
        }
        Ok(MlpModel {
            layer_sizes: doc.layer_sizes,
            weights,
            biases: doc.biases,
            activations: doc.activations,
        })
    }
}

/// Split a complex grid row into the [Re..., Im...] convention used by
/// `frame_features`, for callers assembling features symbol by symbol.
pub fn reim(row: &[Complex64]) -> Vec<f64> {
    row.iter()
        .map(|v| v.re)
        .chain(row.iter().map(|v| v.im))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_model(seed: u64) -> MlpModel {
        let mut rng = RngStream::new(seed, 0);
        MlpModel::init(
            &[4, 5, 3],
            &[Activation::Relu, Activation::Sigmoid],
            &mut rng,
        )
    }

    #[test]
    fn zero_parameters_give_one_half_everywhere() {
        let mut model = tiny_model(1);
        for w in &mut model.weights {
            w.scale(0.0);
        }
        let out = model.forward(&[0.3, -0.2, 1.0, 0.5]).unwrap();
        for v in out {
            assert!((v - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn identity_relu_layer_passes_nonnegative_inputs() {
        let mut rng = RngStream::new(2, 0);
        let mut model = MlpModel::init(&[3, 3], &[Activation::Relu], &mut rng);
        model.weights[0] = RMat::from_fn(3, 3, |i, j| if i == j { 1.0 } else { 0.0 });
        model.biases[0] = vec![0.0; 3];
        let out = model.forward(&[0.5, 0.0, 2.0]).unwrap();
        assert_eq!(out, vec![0.5, 0.0, 2.0]);
    }

    #[test]
    fn forward_matches_independent_loop_oracle() {
        // Second implementation: plain nested loops, no matrices.
        let model = tiny_model(3);
        let mut rng = RngStream::new(4, 0);
        for _ in 0..10 {
            let x: Vec<f64> = (0..4).map(|_| rng.standard_normal()).collect();
            let mut a = x.clone();
            for l in 0..model.weights.len() {
                let w = &model.weights[l];
                let mut next = vec![0.0; w.cols()];
                for (j, nj) in next.iter_mut().enumerate() {
                    let mut acc = model.biases[l][j];
                    for (i, &ai) in a.iter().enumerate() {
                        acc += ai * w[(i, j)];
                    }
                    *nj = model.activations[l].apply(acc);
                }
                a = next;
            }
            let got = model.forward(&x).unwrap();
            for (p, q) in a.iter().zip(&got) {
                assert!((p - q).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn loss_basics_and_hand_case() {
        let p = RMat::from_vec(1, 2, vec![0.5, 0.0]);
        let y = RMat::from_vec(1, 2, vec![1.0, 0.0]);
        assert!((mse_loss(&p, &y).unwrap() - 0.125).abs() < 1e-15);
        assert_eq!(mse_loss(&y, &y).unwrap(), 0.0);
        let shifted = RMat::from_vec(1, 2, vec![2.0, 1.0]);
        assert!((mse_loss(&shifted, &y).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gradients_match_central_finite_differences() {
        let model = tiny_model(5);
        let mut rng = RngStream::new(6, 0);
        let batch = 4;
        let bx = RMat::from_fn(batch, 4, |_, _| rng.standard_normal());
        let by = RMat::from_fn(batch, 3, |_, _| (rng.next_u64() & 1) as f64);
        let (_, grads) = backward(&model, &bx, &by).unwrap();

        let mut checked = 0;
        for (l, pick) in [(0usize, [(0usize, 0usize), (1, 2), (3, 4)]), (1, [(0, 0), (2, 1), (4, 2)])] {
            for (i, j) in pick {
                let h = 1e-6;
                let mut plus = model.clone();
                plus.weights[l][(i, j)] += h;
                let mut minus = model.clone();
                minus.weights[l][(i, j)] -= h;
                let lp = mse_loss(&plus.forward_batch(&bx), &by).unwrap();
                let lm = mse_loss(&minus.forward_batch(&bx), &by).unwrap();
                let fd = (lp - lm) / (2.0 * h);
                let an = grads.weights[l][(i, j)];
                let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-12);
                assert!(rel < 1e-5, "layer {l} w[{i}{j}]: fd {fd} vs {an}");
                checked += 1;
            }
        }
        // Bias spot checks too.
        for l in 0..2 {
            for j in 0..2 {
                let h = 1e-6;
                let mut plus = model.clone();
                plus.biases[l][j] += h;
                let mut minus = model.clone();
                minus.biases[l][j] -= h;
                let lp = mse_loss(&plus.forward_batch(&bx), &by).unwrap();
                let lm = mse_loss(&minus.forward_batch(&bx), &by).unwrap();
                let fd = (lp - lm) / (2.0 * h);
                let an = grads.biases[l][j];
                let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-12);
                assert!(rel < 1e-5, "layer {l} b[{j}]: fd {fd} vs {an}");
                checked += 1;
            }
        }
        assert!(checked >= 10);
    }

    #[test]
    fn gradient_is_zero_at_a_perfect_fit() {
        // With predictions equal to labels the residual is zero, so every
        // gradient vanishes.
        let model = tiny_model(7);
        let bx = RMat::from_vec(1, 4, vec![0.1, 0.2, -0.3, 0.4]);
        let labels = model.forward_batch(&bx);
        let (loss, grads) = backward(&model, &bx, &labels).unwrap();
        assert_eq!(loss, 0.0);
        for g in &grads.weights {
            assert_eq!(g.fro_norm(), 0.0);
        }
    }

    #[test]
    fn adam_with_zero_gradient_leaves_parameters_unchanged() {
        let mut model = tiny_model(8);
        let before = model.clone();
        let grads = Gradients {
            weights: model
                .weights
                .iter()
                .map(|w| RMat::zeros(w.rows(), w.cols()))
                .collect(),
            biases: model.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        };
        let mut state = AdamState::new(&model);
        adam_step(&mut model, &grads, &mut state, &TrainConfig::default()).unwrap();
        for (a, b) in model.weights.iter().zip(&before.weights) {
            assert_eq!(a.data(), b.data());
        }
    }

    #[test]
    fn nan_gradient_aborts() {
        let mut model = tiny_model(9);
        let mut grads = Gradients {
            weights: model
                .weights
                .iter()
                .map(|w| RMat::zeros(w.rows(), w.cols()))
                .collect(),
            biases: model.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        };
        grads.weights[0][(0, 0)] = f64::NAN;
        let mut state = AdamState::new(&model);
        assert!(matches!(
            adam_step(&mut model, &grads, &mut state, &TrainConfig::default()),
            Err(Error::NanGradient(_))
        ));
    }

    #[test]
    fn training_memorizes_a_small_clean_mapping() {
        // Noiseless stand-in: binary labels from a fixed linear rule with a
        // margin (no boundary-hugging examples), downsized net, enough
        // epochs to memorize the training set exactly.
        let mut rng = RngStream::new(10, 0);
        let n = 64;
        let mut features = RMat::zeros(n, 6);
        for i in 0..n {
            loop {
                let row: Vec<f64> = (0..6).map(|_| rng.standard_normal()).collect();
                let margin_ok = (0..4).all(|j| (row[j] + 0.5 * row[j + 1]).abs() > 0.3);
                if margin_ok {
                    features.row_mut(i).copy_from_slice(&row);
                    break;
                }
            }
        }
        let labels = RMat::from_fn(n, 4, |i, j| {
            let x = features.row(i);
            if x[j] + 0.5 * x[j + 1] > 0.0 {
                1.0
            } else {
                0.0
            }
        });
        let data = Dataset {
            features: features.clone(),
            labels: labels.clone(),
        };
        let mut model = MlpModel::detector(6, &[16, 12], 4, &mut rng);
        let cfg = TrainConfig {
            epochs: 200,
            batch_size: 16,
            seed: 11,
            ..TrainConfig::default()
        };
        let curve = train(&mut model, &data, &cfg).unwrap();
        assert!(curve.last().unwrap() <= &curve[0]);
        let mut errors = 0;
        for i in 0..n {
            let bits = model.detect(features.row(i)).unwrap();
            for (b, &y) in bits.iter().zip(labels.row(i)) {
                if *b as f64 != y {
                    errors += 1;
                }
            }
        }
        assert_eq!(errors, 0, "training set not memorized");
    }

    #[test]
    fn training_is_bit_deterministic() {
        let build = || {
            let mut rng = RngStream::new(12, 0);
            let features = RMat::from_fn(32, 6, |_, _| rng.standard_normal());
            let labels = RMat::from_fn(32, 2, |_, _| (rng.next_u64() & 1) as f64);
            let data = Dataset { features, labels };
            let mut model = MlpModel::detector(6, &[8], 2, &mut rng);
            let cfg = TrainConfig {
                epochs: 20,
                batch_size: 8,
                seed: 13,
                ..TrainConfig::default()
            };
            train(&mut model, &data, &cfg).unwrap();
            model
        };
        let a = build();
        let b = build();
        for (wa, wb) in a.weights.iter().zip(&b.weights) {
            for (x, y) in wa.data().iter().zip(wb.data()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn detect_thresholds_at_one_half() {
        let mut rng = RngStream::new(14, 0);
        let mut model = MlpModel::init(&[3, 3], &[Activation::Sigmoid], &mut rng);
        // Force outputs 0.9, 0.1, 0.6 via biases on a zero weight matrix.
        model.weights[0].scale(0.0);
        let logit = |p: f64| (p / (1.0 - p)).ln();
        model.biases[0] = vec![logit(0.9), logit(0.1), logit(0.6)];
        let bits = model.detect(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(bits, vec![1, 0, 1]);
    }

    #[test]
    fn sigmoid_outputs_stay_in_open_unit_interval() {
        let model = tiny_model(15);
        let mut rng = RngStream::new(16, 0);
        for _ in 0..50 {
            let x: Vec<f64> = (0..4).map(|_| 10.0 * rng.standard_normal()).collect();
            for v in model.forward(&x).unwrap() {
                assert!(v > 0.0 && v < 1.0);
            }
        }
    }

    #[test]
    fn checkpoint_roundtrip_is_bit_identical() {
        let model = tiny_model(17);
        let dir = std::env::temp_dir().join("ofdmlink-ckpt-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("tiny.json");
        save_checkpoint(&model, &path).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        let x = [0.1, -0.7, 0.3, 0.9];
        let a = model.forward(&x).unwrap();
        let b = loaded.forward(&x).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert_eq!(p.to_bits(), q.to_bits());
        }
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let model = tiny_model(18);
        assert!(model.forward(&[1.0, 2.0]).is_err());
    }
}
