//! Quantum neural network regressor: angle encoder, `Ry`/CNOT-chain ansatz, summed-Z decoder.
//!
//! Circuit on `n = n_attributes · width` qubits, all starting in |0⟩:
//!
//! 1. Encoder: attribute `k` drives `Ry(arctan(x_k) + π/2)` on each of its qubits
//!    `k·width .. k·width + width` (attribute-major ordering).
//! 2. Ansatz: `depth` identical blocks. Block `b` applies `Ry(params[b·n + q])` to every
//!    qubit `q`, then the CNOT chain `0→1, 1→2, …, n−2→n−1`. No trailing rotation layer.
//! 3. Decoder: `Σ_q ⟨σ_z^q⟩`, so every prediction lies in `[−n, n]`.
//!
//! [`QnnModel::predict`] runs the circuit through [`StateVector`]. [`QnnCost`] is the
//! training objective; it evaluates the same circuit with the real-amplitude kernels and
//! can restrict the cost exactly to any single parameter axis.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{LineFunction, Objective};
use crate::statevector::{real, StateVector, MAX_QUBITS};

/// Maps a scaled attribute to a rotation angle in `(0, π)`.
pub fn encode_angle(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::argument(format!(
            "attribute value {x} is not finite"
        )));
    }
    Ok(x.atan() + FRAC_PI_2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QnnModel {
    n_attributes: usize,
    #[serde(rename = "width_w")]
    width: usize,
    #[serde(rename = "depth_d")]
    depth: usize,
    params: Vec<f64>,
}

impl QnnModel {
    /// New model with angles drawn uniformly from `[0, 2π)` by a ChaCha8 generator seeded with `seed`.
    pub fn build(n_attributes: usize, width: usize, depth: usize, seed: u64) -> Result<Self> {
        check_topology(n_attributes, width, depth)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_params = n_attributes * width * depth;
        let params = (0..n_params).map(|_| rng.random_range(0.0..TAU)).collect();
        Ok(Self {
            n_attributes,
            width,
            depth,
            params,
        })
    }

    pub fn with_params(
        n_attributes: usize,
        width: usize,
        depth: usize,
        params: Vec<f64>,
    ) -> Result<Self> {
        check_topology(n_attributes, width, depth)?;
        let model = Self {
            n_attributes,
            width,
            depth,
            params,
        };
        model.check_params(&model.params)?;
        Ok(model)
    }

    pub fn n_attributes(&self) -> usize {
        self.n_attributes
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn n_qubits(&self) -> usize {
        self.n_attributes * self.width
    }

    pub fn n_params(&self) -> usize {
        self.n_qubits() * self.depth
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn set_params(&mut self, params: Vec<f64>) -> Result<()> {
        self.check_params(&params)?;
        self.params = params;
        Ok(())
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::argument(format!(
                "expected {} parameters, got {}",
                self.n_params(),
                params.len()
            )));
        }
        if let Some(p) = params.iter().find(|p| !p.is_finite()) {
            return Err(Error::argument(format!("parameter {p} is not finite")));
        }
        Ok(())
    }

    fn check_row(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.n_attributes {
            return Err(Error::argument(format!(
                "feature row has {} values, model expects {}",
                row.len(),
                self.n_attributes
            )));
        }
        Ok(())
    }

    /// Product state produced by the encoder for one feature row.
    pub fn apply_encoder(&self, row: &[f64]) -> Result<StateVector> {
        self.check_row(row)?;
        let mut state = StateVector::zero_state(self.n_qubits())?;
        for (k, &x) in row.iter().enumerate() {
            let theta = encode_angle(x)?;
            for qubit in k * self.width..(k + 1) * self.width {
                state.apply_ry(qubit, theta)?;
            }
        }
        Ok(state)
    }

    pub fn apply_ansatz(&self, state: &mut StateVector) -> Result<()> {
        let n = self.n_qubits();
        if state.n_qubits() != n {
            return Err(Error::argument(format!(
                "state has {} qubits, model has {n}",
                state.n_qubits()
            )));
        }
        for block in self.params.chunks_exact(n) {
            for (qubit, &theta) in block.iter().enumerate() {
                state.apply_ry(qubit, theta)?;
            }
            for qubit in 0..n - 1 {
                state.apply_cnot(qubit, qubit + 1)?;
            }
        }
        Ok(())
    }

    pub fn predict(&self, row: &[f64]) -> Result<f64> {
        let mut state = self.apply_encoder(row)?;
        self.apply_ansatz(&mut state)?;
        Ok(state.sum_expectation_z())
    }

    /// Mean squared error over a labelled set, computed through [`StateVector`].
    pub fn mse_cost(&self, features: &[Vec<f64>], targets: &[f64]) -> Result<f64> {
        check_labelled(features, targets)?;
        let mut total = 0.0;
        for (row, &y) in features.iter().zip(targets) {
            let r = self.predict(row)? - y;
            total += r * r;
        }
        Ok(total / targets.len() as f64)
    }

    /// Predictions for many rows through the real-amplitude kernels.
    pub fn predict_batch(&self, features: &[Vec<f64>]) -> Result<Vec<f64>> {
        let circuit = Circuit::new(self.n_attributes, self.width, self.depth)?;
        let encoded = features
            .iter()
            .map(|row| {
                self.check_row(row)?;
                circuit.encode(row)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(circuit.predict_all(&encoded, &self.params))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: QnnModel = serde_json::from_str(text)?;
        Self::with_params(raw.n_attributes, raw.width, raw.depth, raw.params)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

fn check_topology(n_attributes: usize, width: usize, depth: usize) -> Result<()> {
    if !(1..=2).contains(&width) {
        return Err(Error::argument(format!(
            "circuit width must be 1 or 2, got {width}"
        )));
    }
    if depth == 0 {
        return Err(Error::argument("circuit depth must be at least 1"));
    }
    if n_attributes == 0 {
        return Err(Error::argument("model needs at least one attribute"));
    }
    let n_qubits = n_attributes * width;
    if n_qubits > MAX_QUBITS {
        return Err(Error::Size(n_qubits));
    }
    Ok(())
}

fn check_labelled(features: &[Vec<f64>], targets: &[f64]) -> Result<()> {
    if features.is_empty() {
        return Err(Error::argument("cost needs at least one sample"));
    }
    if features.len() != targets.len() {
        return Err(Error::argument(format!(
            "{} feature rows but {} targets",
            features.len(),
            targets.len()
        )));
    }
    Ok(())
}

/// Topology plus precomputed readout weights for the real-amplitude path.
#[derive(Clone, Debug)]
struct Circuit {
    n_qubits: usize,
    width: usize,
    depth: usize,
    /// Σσ_z eigenvalue of each basis state, composed with the last block's CNOT chain
    /// so the final chain never has to be applied.
    readout: Vec<f64>,
}

/// Encoder output for one row: `(cos θ/2, sin θ/2)` per qubit.
type Encoded = Vec<(f64, f64)>;

impl Circuit {
    fn new(n_attributes: usize, width: usize, depth: usize) -> Result<Self> {
        check_topology(n_attributes, width, depth)?;
        let n_qubits = n_attributes * width;
        let weights = real::z_sum_weights(n_qubits);
        let readout = (0..1usize << n_qubits)
            .map(|b| weights[real::chain_image(b, n_qubits)])
            .collect();
        Ok(Self {
            n_qubits,
            width,
            depth,
            readout,
        })
    }

    fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    fn n_params(&self) -> usize {
        self.n_qubits * self.depth
    }

    fn encode(&self, row: &[f64]) -> Result<Encoded> {
        let mut out = Vec::with_capacity(self.n_qubits);
        for &x in row {
            let half = 0.5 * encode_angle(x)?;
            out.extend(std::iter::repeat_n((half.cos(), half.sin()), self.width));
        }
        Ok(out)
    }

    /// Applies gates `from..to` to `state`. Gate `g` is `Ry(params[g])` on qubit `g % n`; a gate
    /// that closes a block other than the last is followed by the CNOT chain.
    fn advance(
        &self,
        state: &mut Vec<f64>,
        scratch: &mut Vec<f64>,
        params: &[f64],
        from: usize,
        to: usize,
    ) {
        let n = self.n_qubits;
        let n_params = self.n_params();
        let mut gates = Vec::with_capacity(n);
        let mut pending_chain = false;
        let mut g = from;
        while g < to {
            let block_end = (g / n + 1) * n;
            let layer_end = block_end.min(to);
            gates.clear();
            gates.extend(params[g..layer_end].iter().enumerate().map(|(i, &theta)| {
                let (sin, cos) = (0.5 * theta).sin_cos();
                ((g + i) % n, cos, sin)
            }));
            if pending_chain {
                real::cnot_chain_then_ry_layer(state, scratch, &gates);
                std::mem::swap(state, scratch);
            } else {
                real::ry_layer(state, &gates);
            }
            pending_chain = layer_end == block_end && block_end < n_params;
            g = layer_end;
        }
        if pending_chain {
            real::cnot_chain(state, scratch);
            std::mem::swap(state, scratch);
        }
    }

    fn predict_one(
        &self,
        encoded: &Encoded,
        params: &[f64],
        state: &mut Vec<f64>,
        scratch: &mut Vec<f64>,
    ) -> f64 {
        real::product_state(encoded, state);
        self.advance(state, scratch, params, 0, params.len());
        real::weighted_norm(state, &self.readout)
    }

    fn predict_all(&self, encoded: &[Encoded], params: &[f64]) -> Vec<f64> {
        let dim = self.dim();
        encoded
            .par_iter()
            .map_init(
                || (vec![0.0; dim], vec![0.0; dim]),
                |(state, scratch), enc| self.predict_one(enc, params, state, scratch),
            )
            .collect()
    }
}

/// One cached circuit prefix per training sample.
#[derive(Debug, Default)]
struct PrefixCache {
    /// All samples' states include exactly gates `0..position`.
    position: usize,
    /// Parameter values those gates were applied with.
    params: Vec<f64>,
    states: Vec<Vec<f64>>,
}

/// MSE training objective for a fixed labelled set.
///
/// Implements [`Objective`], including the exact single-axis restriction: with all other
/// angles fixed, each prediction is `A + B·cos t + C·sin t` in the offset `t` of one angle,
/// so two suffix sweeps per sample determine the cost along that axis completely.
#[derive(Debug)]
pub struct QnnCost {
    circuit: Circuit,
    encoded: Vec<Encoded>,
    targets: Vec<f64>,
    prefix: PrefixCache,
    full_evaluations: usize,
    axis_restrictions: usize,
}

impl QnnCost {
    pub fn new(model: &QnnModel, features: &[Vec<f64>], targets: &[f64]) -> Result<Self> {
        check_labelled(features, targets)?;
        let circuit = Circuit::new(model.n_attributes, model.width, model.depth)?;
        let encoded = features
            .iter()
            .map(|row| {
                model.check_row(row)?;
                circuit.encode(row)
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(y) = targets.iter().find(|y| !y.is_finite()) {
            return Err(Error::argument(format!("target {y} is not finite")));
        }
        Ok(Self {
            circuit,
            encoded,
            targets: targets.to_vec(),
            prefix: PrefixCache::default(),
            full_evaluations: 0,
            axis_restrictions: 0,
        })
    }

    pub fn n_params(&self) -> usize {
        self.circuit.n_params()
    }

    pub fn n_samples(&self) -> usize {
        self.targets.len()
    }

    /// Number of complete cost evaluations performed so far.
    pub fn full_evaluations(&self) -> usize {
        self.full_evaluations
    }

    /// Number of single-axis restrictions built so far.
    pub fn axis_restrictions(&self) -> usize {
        self.axis_restrictions
    }

    pub fn predictions(&self, params: &[f64]) -> Vec<f64> {
        assert_eq!(params.len(), self.n_params(), "parameter count mismatch");
        self.circuit.predict_all(&self.encoded, params)
    }

    pub fn cost(&mut self, params: &[f64]) -> f64 {
        self.full_evaluations += 1;
        let predictions = self.predictions(params);
        mean_squared_residual(&predictions, &self.targets)
    }

    /// Per-sample sinusoid coefficients `(A, B, C)` of the prediction along parameter `axis`,
    /// as a function of the offset added to `params[axis]`.
    pub fn axis_coefficients(&mut self, params: &[f64], axis: usize) -> Vec<(f64, f64, f64)> {
        assert_eq!(params.len(), self.n_params(), "parameter count mismatch");
        assert!(axis < params.len(), "axis {axis} out of range");
        self.axis_restrictions += 1;
        let circuit = &self.circuit;
        let dim = circuit.dim();
        let n_params = circuit.n_params();
        let n = circuit.n_qubits;

        let cache = &mut self.prefix;
        let reusable = cache.states.len() == self.encoded.len()
            && cache.position <= axis
            && cache.params[..cache.position] == params[..cache.position];
        let start = if reusable { cache.position } else { 0 };
        if !reusable {
            cache
                .states
                .resize_with(self.encoded.len(), || vec![0.0; dim]);
            cache.params = vec![0.0; n_params];
        }

        let coefficients = cache
            .states
            .par_iter_mut()
            .zip(self.encoded.par_iter())
            .map_init(
                || (vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]),
                |(u0, u1, scratch), (prefix, enc)| {
                    if start == 0 {
                        real::product_state(enc, prefix);
                    }
                    circuit.advance(prefix, scratch, params, start, axis);

                    u0.copy_from_slice(prefix);
                    let (sin, cos) = (0.5 * params[axis]).sin_cos();
                    real::ry(u0, axis % n, cos, sin);
                    u1.copy_from_slice(u0);
                    real::ry_pi(u1, axis % n);
                    // close the current block, then run the remaining gates on both branches
                    if axis % n == n - 1 && axis + 1 < n_params {
                        for u in [&mut *u0, &mut *u1] {
                            real::cnot_chain(u, scratch);
                            std::mem::swap(u, scratch);
                        }
                    }
                    circuit.advance(u0, scratch, params, axis + 1, n_params);
                    circuit.advance(u1, scratch, params, axis + 1, n_params);
                    let (q00, q01, q11) = real::weighted_quadratic_forms(u0, u1, &circuit.readout);
                    (0.5 * (q00 + q11), 0.5 * (q00 - q11), q01)
                },
            )
            .collect();

        cache.position = axis;
        cache.params[start..axis].copy_from_slice(&params[start..axis]);
        coefficients
    }
}

fn mean_squared_residual(predictions: &[f64], targets: &[f64]) -> f64 {
    let total: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, y)| (p - y) * (p - y))
        .sum();
    total / targets.len() as f64
}

/// Cost along one parameter axis, built from per-sample sinusoid coefficients.
#[derive(Clone, Debug)]
pub struct AxisLine {
    coefficients: Vec<(f64, f64, f64)>,
    targets: Vec<f64>,
}

impl AxisLine {
    pub fn predictions(&self, offset: f64) -> impl Iterator<Item = f64> + '_ {
        let (sin, cos) = offset.sin_cos();
        self.coefficients
            .iter()
            .map(move |&(a, b, c)| a + b * cos + c * sin)
    }
}

impl LineFunction for AxisLine {
    fn value(&self, offset: f64) -> f64 {
        let total: f64 = self
            .predictions(offset)
            .zip(&self.targets)
            .map(|(p, y)| (p - y) * (p - y))
            .sum();
        total / self.targets.len() as f64
    }
}

impl Objective for QnnCost {
    fn value(&mut self, x: &[f64]) -> f64 {
        self.cost(x)
    }

    fn axis_line(&mut self, x: &[f64], axis: usize) -> Option<Box<dyn LineFunction>> {
        let coefficients = self.axis_coefficients(x, axis);
        Some(Box::new(AxisLine {
            coefficients,
            targets: self.targets.clone(),
        }))
    }
}

/// Angles wrapped into `[0, 2π)`; predictions are unchanged up to rounding.
pub fn wrap_angles(params: &mut [f64]) {
    for p in params {
        *p = p.rem_euclid(TAU);
        if *p >= TAU {
            *p -= TAU;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI};

    #[test]
    fn encode_angle_examples() {
        assert!((encode_angle(0.0).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert!((encode_angle(1.0).unwrap() - 3.0 * FRAC_PI_4).abs() < 1e-15);
        let far = encode_angle(10.0).unwrap();
        assert!((far - 3.041924).abs() < 1e-6 && far < PI);
        assert!(encode_angle(-1e6).unwrap() > 0.0);
        assert!(encode_angle(f64::INFINITY).is_err());
        assert!(encode_angle(f64::NAN).is_err());
    }

    #[test]
    fn build_model_examples() {
        let m = QnnModel::build(7, 1, 3, 0).unwrap();
        assert_eq!((m.n_qubits(), m.n_params()), (7, 21));
        let m = QnnModel::build(7, 2, 3, 0).unwrap();
        assert_eq!(m.n_qubits(), 14);
        assert!(m.params().iter().all(|p| (0.0..TAU).contains(p)));
        assert_eq!(
            QnnModel::build(7, 2, 3, 9).unwrap(),
            QnnModel::build(7, 2, 3, 9).unwrap()
        );
        assert_ne!(
            QnnModel::build(7, 2, 3, 9).unwrap(),
            QnnModel::build(7, 2, 3, 10).unwrap()
        );
        assert!(QnnModel::build(7, 3, 3, 0).is_err());
        assert!(QnnModel::build(7, 0, 3, 0).is_err());
        assert!(QnnModel::build(7, 1, 0, 0).is_err());
    }

    #[test]
    fn encoder_marginals() {
        for width in [1, 2] {
            let m = QnnModel::build(7, width, 1, 0).unwrap();
            let s = m.apply_encoder(&[0.0; 7]).unwrap();
            for q in 0..m.n_qubits() {
                assert!(s.expectation_z(q).unwrap().abs() < 1e-14);
            }
        }
        let m = QnnModel::build(7, 1, 1, 0).unwrap();
        let mut row = [0.0; 7];
        row[0] = 1.0;
        let s = m.apply_encoder(&row).unwrap();
        assert!((s.expectation_z(0).unwrap() + FRAC_1_SQRT_2).abs() < 1e-14);
        assert!(m.apply_encoder(&[0.0; 6]).is_err());
    }

    #[test]
    fn width_two_duplicates_angle_attribute_major() {
        let m = QnnModel::build(2, 2, 1, 0).unwrap();
        let s = m.apply_encoder(&[1.0, -0.5]).unwrap();
        let a = encode_angle(1.0).unwrap().cos();
        let b = encode_angle(-0.5).unwrap().cos();
        let z: Vec<f64> = (0..4).map(|q| s.expectation_z(q).unwrap()).collect();
        for (got, want) in z.iter().zip([a, a, b, b]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn ansatz_examples() {
        // zero angles leave only the CNOT chain
        let m = QnnModel::with_params(2, 1, 1, vec![0.0, 0.0]).unwrap();
        let mut s = StateVector::zero_state(2).unwrap();
        s.apply_ry(0, PI).unwrap();
        m.apply_ansatz(&mut s).unwrap();
        assert!((s.amplitudes()[3].re - 1.0).abs() < 1e-14);

        let m = QnnModel::with_params(1, 1, 1, vec![0.4]).unwrap();
        let mut s = StateVector::zero_state(1).unwrap();
        m.apply_ansatz(&mut s).unwrap();
        assert!((s.expectation_z(0).unwrap() - 0.4f64.cos()).abs() < 1e-14);

        let mut wrong = StateVector::zero_state(3).unwrap();
        assert!(m.apply_ansatz(&mut wrong).is_err());
    }

    #[test]
    fn full_turn_angles_match_zero_angles() {
        let zero = QnnModel::with_params(3, 1, 2, vec![0.0; 6]).unwrap();
        let turn = QnnModel::with_params(3, 1, 2, vec![TAU; 6]).unwrap();
        let row = [0.3, -0.8, 1.7];
        assert!((zero.predict(&row).unwrap() - turn.predict(&row).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn predict_examples() {
        let toy = QnnModel::with_params(1, 1, 1, vec![0.0]).unwrap();
        assert!(toy.predict(&[0.0]).unwrap().abs() < 1e-15);
        assert!((toy.predict(&[1.0]).unwrap() + FRAC_1_SQRT_2).abs() < 1e-14);
        let seven = QnnModel::with_params(7, 1, 3, vec![0.0; 21]).unwrap();
        assert!(seven.predict(&[0.0; 7]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn mse_examples() {
        let m = QnnModel::build(3, 1, 2, 4).unwrap();
        let rows = vec![vec![0.1, 0.2, 0.3], vec![-1.0, 0.5, 2.0]];
        let fabricated: Vec<f64> = rows.iter().map(|r| m.predict(r).unwrap()).collect();
        assert!(m.mse_cost(&rows, &fabricated).unwrap() < 1e-28);

        let p = m.predict(&rows[0]).unwrap();
        let cost = m.mse_cost(&rows[..1], &[0.25]).unwrap();
        assert!((cost - (p - 0.25).powi(2)).abs() < 1e-14);

        let mut shifted = m.clone();
        let mut params = m.params().to_vec();
        params[3] += TAU;
        shifted.set_params(params).unwrap();
        let targets = [0.5, -0.5];
        let a = m.mse_cost(&rows, &targets).unwrap();
        let b = shifted.mse_cost(&rows, &targets).unwrap();
        assert!((a - b).abs() < 1e-12);

        assert!(m.mse_cost(&[], &[]).is_err());
        assert!(m.mse_cost(&rows, &[1.0]).is_err());
    }

    #[test]
    fn fast_path_matches_state_vector_path() {
        for (attrs, width, depth) in [(1, 1, 1), (1, 2, 3), (3, 1, 1), (3, 2, 2), (4, 1, 3)] {
            let m = QnnModel::build(attrs, width, depth, 11).unwrap();
            let rows: Vec<Vec<f64>> = (0..4)
                .map(|i| {
                    (0..attrs)
                        .map(|k| ((i * 7 + k * 3) as f64 * 0.37).sin() * 1.5)
                        .collect()
                })
                .collect();
            let fast = m.predict_batch(&rows).unwrap();
            for (row, f) in rows.iter().zip(&fast) {
                assert!((m.predict(row).unwrap() - f).abs() < 1e-12);
            }
            let targets: Vec<f64> = (0..4).map(|i| i as f64 * 0.3 - 0.5).collect();
            let mut cost = QnnCost::new(&m, &rows, &targets).unwrap();
            let reference = m.mse_cost(&rows, &targets).unwrap();
            assert!((cost.cost(m.params()) - reference).abs() < 1e-12);
        }
    }

    #[test]
    fn axis_line_is_exact() {
        let m = QnnModel::build(3, 2, 3, 5).unwrap();
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|i| (0..3).map(|k| ((i * 5 + k) as f64 * 0.71).cos()).collect())
            .collect();
        let targets: Vec<f64> = (0..5).map(|i| (i as f64 * 0.9).sin()).collect();
        let mut cost = QnnCost::new(&m, &rows, &targets).unwrap();
        let mut params = m.params().to_vec();
        // walk axes forwards, backwards and with parameter changes so every cache path runs
        let axes = [0, 1, 5, 6, 11, 12, 17, 3, 9, 9, 16, 2];
        for (step, &axis) in axes.iter().enumerate() {
            let line = cost.axis_line(&params, axis).unwrap();
            for t in [-2.0, -0.3, 0.0, 0.8, 4.0] {
                let mut moved = params.clone();
                moved[axis] += t;
                let mut probe = m.clone();
                probe.set_params(moved).unwrap();
                let want = probe.mse_cost(&rows, &targets).unwrap();
                assert!((line.value(t) - want).abs() < 1e-12, "axis {axis} t {t}");
            }
            params[axis] += 0.1 * step as f64 - 0.4;
        }
    }

    #[test]
    fn json_round_trip() {
        let m = QnnModel::build(7, 2, 3, 1).unwrap();
        let text = m.to_json().unwrap();
        assert!(text.contains("\"width_w\": 2") && text.contains("\"depth_d\": 3"));
        assert_eq!(QnnModel::from_json(&text).unwrap(), m);
        let bad = r#"{"n_attributes":7,"width_w":1,"depth_d":2,"params":[0.0]}"#;
        assert!(QnnModel::from_json(bad).is_err());
    }

    #[test]
    fn wrap_keeps_predictions() {
        let m = QnnModel::with_params(2, 1, 2, vec![-7.0, 13.0, 0.5, 9.9]).unwrap();
        let mut p = m.params().to_vec();
        wrap_angles(&mut p);
        assert!(p.iter().all(|x| (0.0..TAU).contains(x)));
        let wrapped = QnnModel::with_params(2, 1, 2, p).unwrap();
        assert!(
            (m.predict(&[0.2, 0.4]).unwrap() - wrapped.predict(&[0.2, 0.4]).unwrap()).abs() < 1e-12
        );
    }
}
