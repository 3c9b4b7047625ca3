//! Layered models with per-link activation levels and analytic
//! backpropagation.
//!
//! One layer maps `s ↦ bias + A·act∘(W, s)` where the activation applies
//! per link: `out_i = bias_i + Σ_j a_ij·act(w_ij, s_j)`. With all `w = 1`
//! the layer is exactly linear; with `w = 0` only biases pass. Gradients
//! come straight from the closed-form partials of the activations, so
//! backpropagation is exact (finite differences confirm it in the tests).

pub mod approx;
pub mod train;

use std::fs;
use std::path::Path;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activations::ActivationKind;
use crate::matrix::Mat;

pub use approx::{
    fit_universal, fit_universal_ladder, round_output_weights_rational, sup_error_on_grid,
    ApproxConfig, ApproxTarget, LadderRung,
};
pub use train::{
    accuracy, compare_activations, train, two_clusters, ComparisonTable, Dataset, EpochStats,
    Loss, Optimizer, Targets, TrainConfig, TrainResult,
};

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("layer sizes must list an input and at least one layer, got {0:?}")]
    BadLayerSizes(Vec<usize>),
    #[error("input length {got} does not match input size {expected}")]
    InputLength { expected: usize, got: usize },
    #[error("output gradient length {got} does not match output size {expected}")]
    OutputGradLength { expected: usize, got: usize },
    #[error("bias must be nonzero for the fixed-bias approximator")]
    ZeroBias,
    #[error("the clipped activation requires a positive bias, got {0}")]
    NonPositiveBias(f64),
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("dataset invalid: {0}")]
    BadDataset(String),
    #[error("loss became NaN at epoch {epoch}, batch {batch}")]
    NanLoss { epoch: usize, batch: usize },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: invalid checkpoint: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("checkpoint shapes inconsistent: {0}")]
    BadCheckpoint(String),
}

/// Output observation applied to the final layer state.
// TODO: a head defined on the whole state sequence s(0..T), not just s(T)
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputHead {
    /// Return `s(T)` directly.
    Identity,
    /// `p = 1 − exp∘(−s(T))`: the probability observation of the state.
    ProbObservation,
    /// Log-softmax of `s(T)` for classification.
    LogSoftmax,
}

/// Per-layer trainability switches (combined with the global flags in
/// [`TrainConfig`]).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LayerMask {
    pub a: bool,
    pub w: bool,
    pub bias: bool,
}

impl Default for LayerMask {
    fn default() -> Self {
        LayerMask {
            a: true,
            w: true,
            bias: true,
        }
    }
}

/// Feedforward model: per-layer real weights `a`, activation levels
/// `w ∈ [0,1]`, biases, one activation kind, and an output head.
#[derive(Debug, Clone)]
pub struct LayeredTransNN {
    layer_sizes: Vec<usize>,
    a: Vec<Mat>,
    w: Vec<Mat>,
    bias: Vec<Vec<f64>>,
    masks: Vec<LayerMask>,
    /// Layers whose `w` rows are tied (one shared level per source unit).
    tied_w_rows: Vec<bool>,
    activation: ActivationKind,
    head: OutputHead,
    /// Seed the parameters were drawn from (provenance, kept in checkpoints).
    init_seed: u64,
}

/// Forward pass record: node states `s(0) … s(T)` before the head.
#[derive(Debug, Clone)]
pub struct Tape {
    pub states: Vec<Vec<f64>>,
}

/// Parameter-shaped gradient container.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub a: Vec<Mat>,
    pub w: Vec<Mat>,
    pub bias: Vec<Vec<f64>>,
}

impl LayeredTransNN {
    /// Fresh model: inter-layer weights uniform in `±1/√fan_in`, every
    /// activation level at 0.5 (the sigmoid/tanh identity point), biases 1.
    pub fn new(
        layer_sizes: &[usize],
        activation: ActivationKind,
        head: OutputHead,
        seed: u64,
    ) -> Result<Self, LearnError> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(LearnError::BadLayerSizes(layer_sizes.to_vec()));
        }
        let mut rng = StdRng::seed_from_u64(seed);
        let layers = layer_sizes.len() - 1;
        let mut a = Vec::with_capacity(layers);
        let mut w = Vec::with_capacity(layers);
        let mut bias = Vec::with_capacity(layers);
        for k in 0..layers {
            let (n_out, n_in) = (layer_sizes[k + 1], layer_sizes[k]);
            let scale = 1.0 / (n_in as f64).sqrt();
            a.push(Mat::from_fn(n_out, n_in, |_, _| {
                rng.random_range(-scale..scale)
            }));
            w.push(Mat::filled(n_out, n_in, 0.5));
            bias.push(vec![1.0; n_out]);
        }
        Ok(LayeredTransNN {
            layer_sizes: layer_sizes.to_vec(),
            a,
            w,
            bias,
            masks: vec![LayerMask::default(); layers],
            tied_w_rows: vec![false; layers],
            activation,
            head,
            init_seed: seed,
        })
    }

    pub fn layer_count(&self) -> usize {
        self.a.len()
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

    pub fn activation(&self) -> ActivationKind {
        self.activation
    }

    pub fn head(&self) -> OutputHead {
        self.head
    }

    pub fn init_seed(&self) -> u64 {
        self.init_seed
    }

    pub fn layer_a(&self, k: usize) -> &Mat {
        &self.a[k]
    }

    pub fn layer_w(&self, k: usize) -> &Mat {
        &self.w[k]
    }

    pub fn layer_bias(&self, k: usize) -> &[f64] {
        &self.bias[k]
    }

    pub fn mask(&self, k: usize) -> LayerMask {
        self.masks[k]
    }

    pub fn set_mask(&mut self, k: usize, mask: LayerMask) {
        self.masks[k] = mask;
    }

    pub fn set_tied_w_rows(&mut self, k: usize, tied: bool) {
        self.tied_w_rows[k] = tied;
    }

    pub fn tied_w_rows(&self, k: usize) -> bool {
        self.tied_w_rows[k]
    }

    /// Set every activation level in layer `k` to `w` (clamped to `[0,1]`).
    pub fn set_layer_w(&mut self, k: usize, w: f64) {
        let w = w.clamp(0.0, 1.0);
        self.w[k] = Mat::filled(self.w[k].rows(), self.w[k].cols(), w);
    }

    pub fn set_all_w(&mut self, w: f64) {
        for k in 0..self.layer_count() {
            self.set_layer_w(k, w);
        }
    }

    pub fn set_layer_bias(&mut self, k: usize, b: f64) {
        self.bias[k] = vec![b; self.bias[k].len()];
    }

    pub fn set_layer_a(&mut self, k: usize, a: Mat) {
        assert!(a.same_shape(&self.a[k]), "layer a shape mismatch");
        self.a[k] = a;
    }

    pub fn set_layer_w_matrix(&mut self, k: usize, w: Mat) {
        assert!(w.same_shape(&self.w[k]), "layer w shape mismatch");
        assert!(
            w.as_slice().iter().all(|v| (0.0..=1.0).contains(v)),
            "activation levels must lie in [0, 1]"
        );
        self.w[k] = w;
    }

    pub fn set_layer_bias_vec(&mut self, k: usize, b: Vec<f64>) {
        assert_eq!(b.len(), self.bias[k].len(), "layer bias length mismatch");
        self.bias[k] = b;
    }

    pub(crate) fn params_mut(&mut self) -> (&mut Vec<Mat>, &mut Vec<Mat>, &mut Vec<Vec<f64>>) {
        (&mut self.a, &mut self.w, &mut self.bias)
    }

    /// Clamp every activation level into `[0, 1]` (projection after an
    /// unconstrained update).
    pub(crate) fn project_w(&mut self) {
        for w in &mut self.w {
            for v in w.as_mut_slice() {
                *v = v.clamp(0.0, 1.0);
            }
        }
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            a: self
                .a
                .iter()
                .map(|m| Mat::zeros(m.rows(), m.cols()))
                .collect(),
            w: self
                .w
                .iter()
                .map(|m| Mat::zeros(m.rows(), m.cols()))
                .collect(),
            bias: self.bias.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    /// Forward pass: returns the head output and the tape of node states.
    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, Tape), LearnError> {
        if x.len() != self.input_size() {
            return Err(LearnError::InputLength {
                expected: self.input_size(),
                got: x.len(),
            });
        }
        let mut states = Vec::with_capacity(self.layer_count() + 1);
        states.push(x.to_vec());
        for k in 0..self.layer_count() {
            let s = states.last().unwrap();
            let a = &self.a[k];
            let w = &self.w[k];
            let next: Vec<f64> = (0..a.rows())
                .map(|i| {
                    let mut acc = self.bias[k][i];
                    for j in 0..a.cols() {
                        let av = a[(i, j)];
                        if av != 0.0 {
                            acc += av * self.activation.value_raw(w[(i, j)], s[j]);
                        }
                    }
                    acc
                })
                .collect();
            states.push(next);
        }
        let out = self.apply_head(states.last().unwrap());
        Ok((out, Tape { states }))
    }

    fn apply_head(&self, s: &[f64]) -> Vec<f64> {
        match self.head {
            OutputHead::Identity => s.to_vec(),
            OutputHead::ProbObservation => s.iter().map(|&v| -(-v).exp_m1()).collect(),
            OutputHead::LogSoftmax => {
                let max = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let lse = max + s.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
                s.iter().map(|v| v - lse).collect()
            }
        }
    }

    /// Exact reverse-mode gradients of a scalar loss whose gradient with
    /// respect to the head output is `output_grad`, assembled from the
    /// closed-form activation partials on the tape from a matching
    /// [`Self::forward`].
    pub fn backward(&self, tape: &Tape, output_grad: &[f64]) -> Result<Gradients, LearnError> {
        if output_grad.len() != self.output_size() {
            return Err(LearnError::OutputGradLength {
                expected: self.output_size(),
                got: output_grad.len(),
            });
        }
        let mut grads = self.zero_gradients();
        let s_last = tape.states.last().unwrap();
        // chain through the head: ds = dL/ds(T)
        let mut ds: Vec<f64> = match self.head {
            OutputHead::Identity => output_grad.to_vec(),
            OutputHead::ProbObservation => s_last
                .iter()
                .zip(output_grad)
                .map(|(&s, &g)| g * (-s).exp())
                .collect(),
            OutputHead::LogSoftmax => {
                let max = s_last.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let lse = max + s_last.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
                let total: f64 = output_grad.iter().sum();
                s_last
                    .iter()
                    .zip(output_grad)
                    .map(|(&s, &g)| g - (s - lse).exp() * total)
                    .collect()
            }
        };
        for k in (0..self.layer_count()).rev() {
            let s_in = &tape.states[k];
            let a = &self.a[k];
            let w = &self.w[k];
            let mut ds_prev = vec![0.0; s_in.len()];
            for i in 0..a.rows() {
                let gi = ds[i];
                grads.bias[k][i] = gi;
                if gi == 0.0 {
                    continue;
                }
                for j in 0..a.cols() {
                    let wv = w[(i, j)];
                    let av = a[(i, j)];
                    grads.a[k][(i, j)] = gi * self.activation.value_raw(wv, s_in[j]);
                    if av != 0.0 {
                        grads.w[k][(i, j)] = gi * av * self.activation.deriv_w_raw(wv, s_in[j]);
                        ds_prev[j] += gi * av * self.activation.deriv_x_raw(wv, s_in[j]);
                    }
                }
            }
            ds = ds_prev;
        }
        Ok(grads)
    }

    /// Checkpoint to JSON (shapes, flattened per-layer parameters,
    /// activation kind, head).
    pub fn save_checkpoint(&self, path: impl AsRef<Path>) -> Result<(), LearnError> {
        let path = path.as_ref();
        let file = CheckpointFile {
            layer_sizes: self.layer_sizes.clone(),
            activation: self.activation,
            head: self.head,
            a: self.a.iter().map(|m| m.as_slice().to_vec()).collect(),
            w: self.w.iter().map(|m| m.as_slice().to_vec()).collect(),
            bias: self.bias.clone(),
            masks: self.masks.clone(),
            tied_w_rows: self.tied_w_rows.clone(),
            seed: self.init_seed,
        };
        let text = serde_json::to_string_pretty(&file).expect("checkpoint serializes");
        fs::write(path, text).map_err(|source| LearnError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Self, LearnError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| LearnError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let file: CheckpointFile =
            serde_json::from_str(&text).map_err(|source| LearnError::Json {
                path: path.display().to_string(),
                source,
            })?;
        file.into_model()
    }
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    layer_sizes: Vec<usize>,
    activation: ActivationKind,
    head: OutputHead,
    a: Vec<Vec<f64>>,
    w: Vec<Vec<f64>>,
    bias: Vec<Vec<f64>>,
    masks: Vec<LayerMask>,
    tied_w_rows: Vec<bool>,
    #[serde(default)]
    seed: u64,
}

impl CheckpointFile {
    fn into_model(self) -> Result<LayeredTransNN, LearnError> {
        let layers = self.layer_sizes.len().saturating_sub(1);
        if layers == 0 {
            return Err(LearnError::BadCheckpoint("empty layer list".into()));
        }
        let unflatten = |flat: &[Vec<f64>], what: &str| -> Result<Vec<Mat>, LearnError> {
            if flat.len() != layers {
                return Err(LearnError::BadCheckpoint(format!(
                    "{what}: expected {layers} layers, got {}",
                    flat.len()
                )));
            }
            (0..layers)
                .map(|k| {
                    let (rows, cols) = (self.layer_sizes[k + 1], self.layer_sizes[k]);
                    if flat[k].len() != rows * cols {
                        return Err(LearnError::BadCheckpoint(format!(
                            "{what}[{k}]: expected {} values, got {}",
                            rows * cols,
                            flat[k].len()
                        )));
                    }
                    let mut m = Mat::zeros(rows, cols);
                    m.as_mut_slice().copy_from_slice(&flat[k]);
                    Ok(m)
                })
                .collect()
        };
        let a = unflatten(&self.a, "a")?;
        let w = unflatten(&self.w, "w")?;
        if self.bias.len() != layers
            || self
                .bias
                .iter()
                .enumerate()
                .any(|(k, b)| b.len() != self.layer_sizes[k + 1])
        {
            return Err(LearnError::BadCheckpoint("bias shape mismatch".into()));
        }
        for (k, wm) in w.iter().enumerate() {
            if let Some(((i, j), v)) = wm.iter().find(|(_, v)| !(0.0..=1.0).contains(v)) {
                return Err(LearnError::BadCheckpoint(format!(
                    "w[{k}][{i}][{j}] = {v} outside [0,1]"
                )));
            }
        }
        Ok(LayeredTransNN {
            layer_sizes: self.layer_sizes,
            a,
            w,
            bias: self.bias,
            masks: self.masks,
            tied_w_rows: self.tied_w_rows,
            activation: self.activation,
            head: self.head,
            init_seed: self.seed,
        })
    }
}
