//! Variational quantum-circuit regression.
//!
//! The crate bundles everything needed to fit and evaluate a small quantum
//! neural network (QNN) on tabular data by exact state-vector simulation:
//!
//! * [`statevector`]: dense n-qubit simulator with `Ry`, `CNOT` and Pauli-Z readout.
//! * [`qnn`]: arctan angle encoder, `Ry`/CNOT-chain ansatz and summed-Z decoder.
//! * [`optim`]: Powell's direction-set method with Brent line minimization.
//! * [`mlp`]: fully connected ReLU regressor trained with Adam, the classical baseline.
//! * [`data`]: UCI Auto-MPG parsing, scaling and seeded train/test splits.
//! * [`harness`]: single runs, experiment grids, R² metrics and report emission.

pub mod data;
pub mod error;
pub mod harness;
pub mod mlp;
pub mod optim;
pub mod qnn;
pub mod statevector;

pub use error::{Error, Result};
