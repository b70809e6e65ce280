//! Independent oracles shared by the integration tests and the acceptance suite.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

#[derive(Clone, Copy, Debug)]
pub enum Gate {
    Ry(usize, f64),
    Cnot(usize, usize),
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn mat2(a: f64, b: f64, c: f64, d: f64) -> DMatrix<Complex64> {
    DMatrix::from_row_slice(2, 2, &[re(a), re(b), re(c), re(d)])
}

pub fn ry_matrix(theta: f64) -> DMatrix<Complex64> {
    let (s, c) = (theta / 2.0).sin_cos();
    mat2(c, -s, s, c)
}

/// `⊗_q op_q` with qubit 0 as the rightmost factor, so it is the least significant bit.
pub fn embed(n: usize, ops: &[(usize, DMatrix<Complex64>)]) -> DMatrix<Complex64> {
    let mut full = DMatrix::from_element(1, 1, re(1.0));
    for q in (0..n).rev() {
        let factor = ops
            .iter()
            .find(|(k, _)| *k == q)
            .map(|(_, m)| m.clone())
            .unwrap_or_else(|| DMatrix::identity(2, 2));
        full = full.kronecker(&factor);
    }
    full
}

pub fn gate_matrix(n: usize, gate: Gate) -> DMatrix<Complex64> {
    match gate {
        Gate::Ry(q, theta) => embed(n, &[(q, ry_matrix(theta))]),
        Gate::Cnot(c, t) => {
            let p0 = mat2(1.0, 0.0, 0.0, 0.0);
            let p1 = mat2(0.0, 0.0, 0.0, 1.0);
            let x = mat2(0.0, 1.0, 1.0, 0.0);
            embed(n, &[(c, p0)]) + embed(n, &[(c, p1), (t, x)])
        }
    }
}

pub fn zero_state(n: usize) -> DVector<Complex64> {
    let mut v = DVector::from_element(1 << n, re(0.0));
    v[0] = re(1.0);
    v
}

pub fn run(n: usize, gates: &[Gate], state: DVector<Complex64>) -> DVector<Complex64> {
    gates.iter().fold(state, |psi, &g| gate_matrix(n, g) * psi)
}

pub fn z_expectation(n: usize, psi: &DVector<Complex64>, q: usize) -> f64 {
    let z = embed(n, &[(q, mat2(1.0, 0.0, 0.0, -1.0))]);
    (psi.adjoint() * (z * psi))[(0, 0)].re
}

/// The QNN circuit written out gate by gate: arctan encoder (each attribute's angle on its
/// `width` consecutive qubits), then `depth` blocks of an Ry layer and the CNOT chain, read
/// out as Σ⟨Z⟩.
pub fn qnn_predict(width: usize, depth: usize, params: &[f64], row: &[f64]) -> f64 {
    let n = row.len() * width;
    let mut gates = Vec::new();
    for (k, &x) in row.iter().enumerate() {
        let angle = x.atan() + std::f64::consts::FRAC_PI_2;
        for j in 0..width {
            gates.push(Gate::Ry(k * width + j, angle));
        }
    }
    for b in 0..depth {
        for q in 0..n {
            gates.push(Gate::Ry(q, params[b * n + q]));
        }
        for q in 0..n.saturating_sub(1) {
            gates.push(Gate::Cnot(q, q + 1));
        }
    }
    let psi = run(n, &gates, zero_state(n));
    (0..n).map(|q| z_expectation(n, &psi, q)).sum()
}

/// Minimizer of `½ xᵀAx − bᵀx`, by Cholesky.
pub fn quadratic_minimizer(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    a.clone().cholesky().expect("positive definite").solve(b)
}

/// Dataset path of the bundled Auto-MPG copy.
pub fn auto_mpg_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/auto-mpg.data")
}
