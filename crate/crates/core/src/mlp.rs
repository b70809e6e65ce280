//! Fully connected ReLU regressor trained by full-batch Adam with an optional L2 penalty.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Input width, two hidden layers of 100 units, scalar output.
pub const DEFAULT_LAYER_SIZES: [usize; 4] = [7, 100, 100, 1];

/// L2 weights tried by [`select_l2_weight`] when no grid is given.
pub const DEFAULT_L2_GRID: [f64; 5] = [1e-5, 1e-4, 1e-3, 1e-2, 1e-1];

#[derive(Clone, Debug, PartialEq)]
pub struct MlpModel {
    layer_sizes: Vec<usize>,
    /// `weights[l]` has shape `(layer_sizes[l], layer_sizes[l + 1])`.
    weights: Vec<Array2<f64>>,
    biases: Vec<Array1<f64>>,
}

/// Gradient of the loss, shaped like the model parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

/// Pre-activations and activations of one forward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    /// `activations[0]` is the input; `activations[l]` is the output of layer `l`.
    pub activations: Vec<Array2<f64>>,
    pub pre_activations: Vec<Array2<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub l2_weight: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.02,
            epochs: 10_000,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            l2_weight: 0.0,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::argument(format!(
                "learning rate {} must be finite and non-negative",
                self.learning_rate
            )));
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            return Err(Error::argument("Adam betas must lie in [0, 1)"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::argument("Adam epsilon must be positive"));
        }
        if !(self.l2_weight >= 0.0 && self.l2_weight.is_finite()) {
            return Err(Error::argument(format!(
                "L2 weight {} must be finite and non-negative",
                self.l2_weight
            )));
        }
        Ok(())
    }
}

/// Loss recorded before each Adam step.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub losses: Vec<f64>,
}

impl TrainHistory {
    pub fn final_loss(&self) -> Option<f64> {
        self.losses.last().copied()
    }
}

impl MlpModel {
    /// He-normal weights (`N(0, 2/fan_in)`), zero biases, deterministic per seed.
    pub fn init(layer_sizes: &[usize], seed: u64) -> Result<Self> {
        check_layer_sizes(layer_sizes)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::with_capacity(layer_sizes.len() - 1);
        let mut biases = Vec::with_capacity(layer_sizes.len() - 1);
        for pair in layer_sizes.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt())
                .map_err(|e| Error::argument(e.to_string()))?;
            weights.push(Array2::from_shape_simple_fn((fan_in, fan_out), || {
                normal.sample(&mut rng)
            }));
            biases.push(Array1::zeros(fan_out));
        }
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
        })
    }

    pub fn from_parts(weights: Vec<Array2<f64>>, biases: Vec<Array1<f64>>) -> Result<Self> {
        if weights.is_empty() || weights.len() != biases.len() {
            return Err(Error::argument("need one bias vector per weight matrix"));
        }
        let mut layer_sizes = vec![weights[0].nrows()];
        for (l, (w, b)) in weights.iter().zip(&biases).enumerate() {
            if w.nrows() != *layer_sizes.last().unwrap() || b.len() != w.ncols() {
                return Err(Error::argument(format!(
                    "layer {l} shapes are inconsistent"
                )));
            }
            layer_sizes.push(w.ncols());
        }
        check_layer_sizes(&layer_sizes)?;
        let model = Self {
            layer_sizes,
            weights,
            biases,
        };
        if !model.parameters().all(f64::is_finite) {
            return Err(Error::argument("model parameters must be finite"));
        }
        Ok(model)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn weights(&self) -> &[Array2<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Array1<f64>] {
        &self.biases
    }

    pub fn n_inputs(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn n_params(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>()
            + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    fn parameters(&self) -> impl Iterator<Item = f64> + '_ {
        self.weights
            .iter()
            .flat_map(|w| w.iter().copied())
            .chain(self.biases.iter().flat_map(|b| b.iter().copied()))
    }

    /// Sum of squared weights (biases excluded).
    pub fn weight_norm_sqr(&self) -> f64 {
        self.weights
            .iter()
            .map(|w| w.iter().map(|v| v * v).sum::<f64>())
            .sum()
    }

    fn check_inputs(&self, inputs: &Array2<f64>) -> Result<()> {
        if inputs.ncols() != self.n_inputs() {
            return Err(Error::argument(format!(
                "inputs have {} columns, network expects {}",
                inputs.ncols(),
                self.n_inputs()
            )));
        }
        Ok(())
    }

    /// Affine layers with ReLU between them; the last layer is linear.
    pub fn forward_batch(&self, inputs: &Array2<f64>) -> Result<ForwardCache> {
        self.check_inputs(inputs)?;
        let last = self.weights.len() - 1;
        let mut activations = vec![inputs.clone()];
        let mut pre_activations = Vec::with_capacity(self.weights.len());
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let z = activations[l].dot(w) + b;
            let a = if l == last {
                z.clone()
            } else {
                z.mapv(|v| v.max(0.0))
            };
            pre_activations.push(z);
            activations.push(a);
        }
        Ok(ForwardCache {
            activations,
            pre_activations,
        })
    }

    /// Output for one input vector, with the cache of the pass.
    pub fn forward(&self, input: &[f64]) -> Result<(f64, ForwardCache)> {
        if input.iter().any(|v| !v.is_finite()) {
            return Err(Error::argument("input contains non-finite values"));
        }
        let x = Array2::from_shape_vec((1, input.len()), input.to_vec())
            .map_err(|e| Error::argument(e.to_string()))?;
        let cache = self.forward_batch(&x)?;
        let out = cache.activations.last().unwrap()[[0, 0]];
        Ok((out, cache))
    }

    pub fn predict(&self, inputs: &Array2<f64>) -> Result<Array1<f64>> {
        let cache = self.forward_batch(inputs)?;
        Ok(cache.activations.last().unwrap().column(0).to_owned())
    }

    pub fn predict_rows(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        Ok(self.predict(&rows_to_matrix(rows)?)?.to_vec())
    }

    /// `MSE + λ·Σw²` over the batch and its gradient by backpropagation.
    pub fn loss_and_gradients(
        &self,
        inputs: &Array2<f64>,
        targets: ArrayView1<'_, f64>,
        l2_weight: f64,
    ) -> Result<(f64, Gradients)> {
        let n = inputs.nrows();
        if n == 0 {
            return Err(Error::argument("empty batch"));
        }
        if targets.len() != n {
            return Err(Error::argument(format!(
                "{n} inputs but {} targets",
                targets.len()
            )));
        }
        let cache = self.forward_batch(inputs)?;
        let output = cache.activations.last().unwrap().column(0);
        let residual = &output - &targets;
        let data_loss = residual.iter().map(|r| r * r).sum::<f64>() / n as f64;
        let loss = data_loss + l2_weight * self.weight_norm_sqr();
        if !loss.is_finite() {
            return Err(Error::Numeric {
                at: loss,
                detail: "loss is not finite".into(),
            });
        }

        let layers = self.weights.len();
        let mut grad_w = Vec::with_capacity(layers);
        let mut grad_b = Vec::with_capacity(layers);
        let mut delta = (residual * (2.0 / n as f64)).insert_axis(Axis(1));
        for l in (0..layers).rev() {
            let gw = cache.activations[l].t().dot(&delta) + &self.weights[l] * (2.0 * l2_weight);
            let gb = delta.sum_axis(Axis(0));
            if l > 0 {
                let mut back = delta.dot(&self.weights[l].t());
                back.zip_mut_with(&cache.pre_activations[l - 1], |d, &z| {
                    if z <= 0.0 {
                        *d = 0.0;
                    }
                });
                delta = back;
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

    pub fn to_json(&self) -> Result<String> {
        let file = MlpFile {
            layer_sizes: self.layer_sizes.clone(),
            weights: self
                .weights
                .iter()
                .map(|w| w.iter().copied().collect())
                .collect(),
            biases: self.biases.iter().map(|b| b.to_vec()).collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MlpFile = serde_json::from_str(text)?;
        check_layer_sizes(&file.layer_sizes)?;
        if file.weights.len() != file.layer_sizes.len() - 1
            || file.biases.len() != file.weights.len()
        {
            return Err(Error::argument("layer count does not match layer_sizes"));
        }
        let weights = file
            .layer_sizes
            .windows(2)
            .zip(file.weights)
            .map(|(pair, flat)| {
                Array2::from_shape_vec((pair[0], pair[1]), flat)
                    .map_err(|e| Error::argument(e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        let biases = file.biases.into_iter().map(Array1::from_vec).collect();
        Self::from_parts(weights, biases)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

/// On-disk layout: layer sizes plus row-major flattened weights and biases.
#[derive(Serialize, Deserialize)]
struct MlpFile {
    layer_sizes: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

fn check_layer_sizes(layer_sizes: &[usize]) -> Result<()> {
    if layer_sizes.len() < 2 {
        return Err(Error::argument(format!(
            "network needs at least 2 layers, got {}",
            layer_sizes.len()
        )));
    }
    if layer_sizes.contains(&0) {
        return Err(Error::argument("layer sizes must be positive"));
    }
    if *layer_sizes.last().unwrap() != 1 {
        return Err(Error::argument(
            "regression network must have a single output",
        ));
    }
    Ok(())
}

pub fn init_mlp(layer_sizes: &[usize], seed: u64) -> Result<MlpModel> {
    MlpModel::init(layer_sizes, seed)
}

pub fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<Array2<f64>> {
    let width = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != width) {
        return Err(Error::argument("ragged feature matrix"));
    }
    Array2::from_shape_vec((rows.len(), width), rows.concat())
        .map_err(|e| Error::argument(e.to_string()))
}

struct AdamState {
    m_w: Vec<Array2<f64>>,
    v_w: Vec<Array2<f64>>,
    m_b: Vec<Array1<f64>>,
    v_b: Vec<Array1<f64>>,
    step: i32,
}

impl AdamState {
    fn new(model: &MlpModel) -> Self {
        let zeros_w: Vec<_> = model
            .weights
            .iter()
            .map(|w| Array2::zeros(w.raw_dim()))
            .collect();
        let zeros_b: Vec<_> = model
            .biases
            .iter()
            .map(|b| Array1::zeros(b.len()))
            .collect();
        Self {
            m_w: zeros_w.clone(),
            v_w: zeros_w,
            m_b: zeros_b.clone(),
            v_b: zeros_b,
            step: 0,
        }
    }

    fn update(&mut self, model: &mut MlpModel, grads: &Gradients, config: &AdamConfig) {
        self.step += 1;
        let c1 = 1.0 - config.beta1.powi(self.step);
        let c2 = 1.0 - config.beta2.powi(self.step);
        let (b1, b2, lr, eps) = (
            config.beta1,
            config.beta2,
            config.learning_rate,
            config.epsilon,
        );
        let step = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
        };
        for l in 0..model.weights.len() {
            ndarray::Zip::from(&mut model.weights[l])
                .and(&mut self.m_w[l])
                .and(&mut self.v_w[l])
                .and(&grads.weights[l])
                .for_each(|p, m, v, &g| step(p, m, v, g));
            ndarray::Zip::from(&mut model.biases[l])
                .and(&mut self.m_b[l])
                .and(&mut self.v_b[l])
                .and(&grads.biases[l])
                .for_each(|p, m, v, &g| step(p, m, v, g));
        }
    }
}

/// Full-batch Adam: one step per epoch on the whole training set.
pub fn train_mlp(
    model: &MlpModel,
    inputs: &Array2<f64>,
    targets: &Array1<f64>,
    config: &AdamConfig,
) -> Result<(MlpModel, TrainHistory)> {
    config.validate()?;
    if inputs.nrows() == 0 {
        return Err(Error::argument("training set is empty"));
    }
    let mut model = model.clone();
    let mut adam = AdamState::new(&model);
    let mut history = TrainHistory {
        losses: Vec::with_capacity(config.epochs),
    };
    for epoch in 0..config.epochs {
        let (loss, grads) = model
            .loss_and_gradients(inputs, targets.view(), config.l2_weight)
            .map_err(|e| match e {
                Error::Numeric { at, .. } => Error::Numeric {
                    at,
                    detail: format!("training diverged at epoch {epoch}"),
                },
                other => other,
            })?;
        history.losses.push(loss);
        adam.update(&mut model, &grads, config);
    }
    Ok((model, history))
}

pub fn mse(predictions: &[f64], targets: &[f64]) -> f64 {
    predictions
        .iter()
        .zip(targets)
        .map(|(p, y)| (p - y) * (p - y))
        .sum::<f64>()
        / targets.len() as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct L2Selection {
    pub best: f64,
    /// `(λ, validation MSE)` in grid order.
    pub validation_mse: Vec<(f64, f64)>,
}

/// Picks the L2 weight with the lowest validation MSE on a seeded 80/20 split of the
/// training rows. Ties go to the larger weight. Every candidate starts from the same
/// initialization (`init_seed`).
pub fn select_l2_weight(
    rows: &[Vec<f64>],
    targets: &[f64],
    grid: &[f64],
    split_seed: u64,
    init_seed: u64,
    layer_sizes: &[usize],
    config: &AdamConfig,
) -> Result<L2Selection> {
    if grid.is_empty() {
        return Err(Error::argument("L2 grid is empty"));
    }
    if rows.len() != targets.len() {
        return Err(Error::argument("row and target counts differ"));
    }
    if rows.len() < 5 {
        return Err(Error::argument(format!(
            "need at least 5 training rows to hold out a validation set, got {}",
            rows.len()
        )));
    }
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(split_seed));
    let n_fit = rows.len() * 4 / 5;
    if n_fit == 0 || n_fit == rows.len() {
        return Err(Error::argument("validation split leaves an empty side"));
    }
    let pick = |idx: &[usize]| -> Result<(Array2<f64>, Array1<f64>)> {
        let x: Vec<Vec<f64>> = idx.iter().map(|&i| rows[i].clone()).collect();
        let y: Array1<f64> = idx.iter().map(|&i| targets[i]).collect();
        Ok((rows_to_matrix(&x)?, y))
    };
    let (fit_x, fit_y) = pick(&order[..n_fit])?;
    let (val_x, val_y) = pick(&order[n_fit..])?;
    let start = MlpModel::init(layer_sizes, init_seed)?;

    let validation_mse = grid
        .par_iter()
        .map(|&lambda| {
            let cfg = AdamConfig {
                l2_weight: lambda,
                ..config.clone()
            };
            let (trained, _) = train_mlp(&start, &fit_x, &fit_y, &cfg)?;
            let pred = trained.predict(&val_x)?;
            Ok((
                lambda,
                mse(pred.as_slice().unwrap(), val_y.as_slice().unwrap()),
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut best = validation_mse[0];
    for &(lambda, err) in &validation_mse[1..] {
        if err < best.1 || (err == best.1 && lambda > best.0) {
            best = (lambda, err);
        }
    }
    Ok(L2Selection {
        best: best.0,
        validation_mse,
    })
}
