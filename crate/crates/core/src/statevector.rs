//! Dense state-vector simulation restricted to the gates the QNN needs.
//!
//! Basis ordering is little-endian: qubit `q` is bit `q` of the basis index,
//! so qubit 0 is the least significant bit.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Resource guard on the number of simulated qubits (2^24 amplitudes = 256 MiB).
pub const MAX_QUBITS: usize = 24;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// |0…0⟩ on `n_qubits` qubits.
    pub fn zero_state(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Size(n_qubits));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Wraps raw amplitudes. The length must be a power of two; no normalization is applied.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::argument(format!(
                "amplitude count {len} is not a power of two >= 2"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        if n_qubits > MAX_QUBITS {
            return Err(Error::Size(n_qubits));
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    /// Σ|a_i|².
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(Error::index("qubits", qubit, self.n_qubits));
        }
        Ok(())
    }

    /// Applies `Ry(theta) = [[cos θ/2, −sin θ/2], [sin θ/2, cos θ/2]]` to `qubit`.
    pub fn apply_ry(&mut self, qubit: usize, theta: f64) -> Result<()> {
        self.check_qubit(qubit)?;
        if !theta.is_finite() {
            return Err(Error::argument(format!(
                "rotation angle {theta} is not finite"
            )));
        }
        let (sin, cos) = (0.5 * theta).sin_cos();
        let stride = 1usize << qubit;
        for chunk in self.amplitudes.chunks_exact_mut(2 * stride) {
            let (lo, hi) = chunk.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a0, *a1);
                *a0 = x * cos - y * sin;
                *a1 = x * sin + y * cos;
            }
        }
        Ok(())
    }

    /// Flips `target` on every basis state whose `control` bit is set.
    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::argument(format!(
                "CNOT control and target are both qubit {control}"
            )));
        }
        let control_bit = 1usize << control;
        let target_bit = 1usize << target;
        for i in 0..self.amplitudes.len() {
            // visit each swapped pair once, from its target-bit-0 member
            if i & control_bit != 0 && i & target_bit == 0 {
                self.amplitudes.swap(i, i | target_bit);
            }
        }
        Ok(())
    }

    /// ⟨σ_z⟩ on one qubit.
    pub fn expectation_z(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        let bit = 1usize << qubit;
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let p = a.norm_sqr();
                if i & bit == 0 {
                    p
                } else {
                    -p
                }
            })
            .sum())
    }

    /// Σ_q ⟨σ_z^q⟩ in a single pass: basis state `i` contributes `n − 2·popcount(i)`.
    pub fn sum_expectation_z(&self) -> f64 {
        let n = self.n_qubits as f64;
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| a.norm_sqr() * (n - 2.0 * i.count_ones() as f64))
            .sum()
    }
}

/// Real-amplitude kernels.
///
/// `Ry` is a real matrix and CNOT a permutation, so a circuit made only of
/// these gates acting on |0…0⟩ keeps every amplitude real. These slice
/// kernels exploit that for the training hot path; they implement the same
/// gates as [`StateVector`] with the same bit ordering.
pub mod real {
    /// Writes the product state `⊗_q (cos_q |0⟩ + sin_q |1⟩)` into `out`.
    ///
    /// `half_angles[q]` holds `(cos θ_q/2, sin θ_q/2)`; `out.len()` must be `2^half_angles.len()`.
    pub fn product_state(half_angles: &[(f64, f64)], out: &mut [f64]) {
        debug_assert_eq!(out.len(), 1 << half_angles.len());
        out[0] = 1.0;
        for (q, &(cos, sin)) in half_angles.iter().enumerate() {
            let len = 1usize << q;
            let (lo, hi) = out[..2 * len].split_at_mut(len);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                *a1 = *a0 * sin;
                *a0 *= cos;
            }
        }
    }

    /// `Ry` on `qubit` given `cos θ/2` and `sin θ/2`.
    #[inline]
    pub fn ry(amps: &mut [f64], qubit: usize, cos: f64, sin: f64) {
        let stride = 1usize << qubit;
        for chunk in amps.chunks_exact_mut(2 * stride) {
            let (lo, hi) = chunk.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a0, *a1);
                *a0 = cos * x - sin * y;
                *a1 = sin * x + cos * y;
            }
        }
    }

    /// `Ry(π)` up to nothing: maps (x, y) on the qubit pair to (−y, x).
    #[inline]
    pub fn ry_pi(amps: &mut [f64], qubit: usize) {
        let stride = 1usize << qubit;
        for chunk in amps.chunks_exact_mut(2 * stride) {
            let (lo, hi) = chunk.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let x = *a0;
                *a0 = -*a1;
                *a1 = x;
            }
        }
    }

    /// CNOT chain `0→1, 1→2, …, n−2→n−1`, applied in that order, from `src` into `dst`.
    ///
    /// The chain sends basis index `b` to its prefix-XOR `b_0, b_0^b_1, …`, whose inverse is
    /// `j ^ (j << 1)`, so the whole chain is one gather.
    #[inline]
    pub fn cnot_chain(src: &[f64], dst: &mut [f64]) {
        let mask = src.len() - 1;
        for (j, out) in dst.iter_mut().enumerate() {
            *out = src[(j ^ (j << 1)) & mask];
        }
    }

    /// Qubits below this index are rotated chunk by chunk, each chunk small enough for L1.
    pub const CHUNK_QUBITS: usize = 11;

    /// `(qubit, cos θ/2, sin θ/2)` for one `Ry` of a layer.
    pub type RyGate = (usize, f64, f64);

    /// Applies `Ry` gates on distinct qubits (they commute).
    ///
    /// Gates on low qubits only mix amplitudes inside aligned chunks of `2^CHUNK_QUBITS`,
    /// so they are applied chunk by chunk; high-qubit gates take full passes, two at a time.
    pub fn ry_layer(amps: &mut [f64], gates: &[RyGate]) {
        let chunk = amps.len().min(1 << CHUNK_QUBITS);
        let low = LowGates::new(gates, amps.len());
        if low.any || gates.iter().any(|g| is_mid(g.0, chunk)) {
            for block in amps.chunks_exact_mut(chunk) {
                low.apply(block);
                for &(q, cos, sin) in gates.iter().filter(|g| is_mid(g.0, chunk)) {
                    ry(block, q, cos, sin);
                }
            }
        }
        high_gates(amps, gates, chunk);
    }

    /// CNOT chain from `src` into `dst`, then `ry_layer(dst, gates)`, with the gather and the
    /// low-qubit gates sharing one pass.
    pub fn cnot_chain_then_ry_layer(src: &[f64], dst: &mut [f64], gates: &[RyGate]) {
        let mask = src.len() - 1;
        let chunk = dst.len().min(1 << CHUNK_QUBITS);
        let low = LowGates::new(gates, dst.len());
        for (c, block) in dst.chunks_exact_mut(chunk).enumerate() {
            let base = c * chunk;
            for (offset, out) in block.iter_mut().enumerate() {
                let j = base + offset;
                *out = src[(j ^ (j << 1)) & mask];
            }
            low.apply(block);
            for &(q, cos, sin) in gates.iter().filter(|g| is_mid(g.0, chunk)) {
                ry(block, q, cos, sin);
            }
        }
        high_gates(dst, gates, chunk);
    }

    const LOW_QUBITS: usize = 3;
    const LOW_DIM: usize = 1 << LOW_QUBITS;

    fn is_mid(q: usize, chunk: usize) -> bool {
        q >= LOW_QUBITS && (1usize << q) < chunk
    }

    /// The gates on qubits `0..3` as one dense 8×8 matrix acting on consecutive octets.
    /// Registers with fewer than three qubits fall back to the plain kernel.
    struct LowGates {
        any: bool,
        octets: bool,
        columns: [[f64; LOW_DIM]; LOW_DIM],
        gates: Vec<RyGate>,
    }

    impl LowGates {
        fn new(gates: &[RyGate], len: usize) -> Self {
            let gates: Vec<RyGate> = gates.iter().copied().filter(|g| g.0 < LOW_QUBITS).collect();
            let mut columns = [[0.0; LOW_DIM]; LOW_DIM];
            for (k, column) in columns.iter_mut().enumerate() {
                column[k] = 1.0;
                for &(q, cos, sin) in &gates {
                    ry(column, q, cos, sin);
                }
            }
            Self {
                any: !gates.is_empty(),
                octets: len >= LOW_DIM,
                columns,
                gates,
            }
        }

        fn apply(&self, amps: &mut [f64]) {
            if !self.any {
                return;
            }
            if !self.octets {
                for &(q, cos, sin) in &self.gates {
                    ry(amps, q, cos, sin);
                }
                return;
            }
            for octet in amps.chunks_exact_mut(LOW_DIM) {
                let mut out = [0.0; LOW_DIM];
                for (column, &x) in self.columns.iter().zip(octet.iter()) {
                    for (o, &m) in out.iter_mut().zip(column) {
                        *o += m * x;
                    }
                }
                octet.copy_from_slice(&out);
            }
        }
    }

    fn high_gates(amps: &mut [f64], gates: &[RyGate], chunk: usize) {
        let high: Vec<RyGate> = gates
            .iter()
            .copied()
            .filter(|g| (1usize << g.0) >= chunk && g.0 >= LOW_QUBITS)
            .collect();
        let mut pairs = high.chunks_exact(2);
        for pair in &mut pairs {
            ry_pair(amps, pair[0], pair[1]);
        }
        for &(q, cos, sin) in pairs.remainder() {
            ry(amps, q, cos, sin);
        }
    }

    /// Two `Ry` gates on distinct qubits in a single pass.
    pub fn ry_pair(amps: &mut [f64], first: RyGate, second: RyGate) {
        let (lo_gate, hi_gate) = if first.0 < second.0 {
            (first, second)
        } else {
            (second, first)
        };
        let (qa, ca, sa) = lo_gate;
        let (qb, cb, sb) = hi_gate;
        let (stride_a, stride_b) = (1usize << qa, 1usize << qb);
        for outer in amps.chunks_exact_mut(2 * stride_b) {
            let (b0, b1) = outer.split_at_mut(stride_b);
            for (c0, c1) in b0
                .chunks_exact_mut(2 * stride_a)
                .zip(b1.chunks_exact_mut(2 * stride_a))
            {
                let (x00, x01) = c0.split_at_mut(stride_a);
                let (x10, x11) = c1.split_at_mut(stride_a);
                for (((p00, p01), p10), p11) in x00.iter_mut().zip(x01).zip(x10).zip(x11) {
                    // qubit a mixes (00, 01) and (10, 11); qubit b mixes the results across halves
                    let y00 = ca * *p00 - sa * *p01;
                    let y01 = sa * *p00 + ca * *p01;
                    let y10 = ca * *p10 - sa * *p11;
                    let y11 = sa * *p10 + ca * *p11;
                    *p00 = cb * y00 - sb * y10;
                    *p10 = sb * y00 + cb * y10;
                    *p01 = cb * y01 - sb * y11;
                    *p11 = sb * y01 + cb * y11;
                }
            }
        }
    }

    /// Basis index after the CNOT chain acts on basis index `b` of an `n`-qubit register.
    pub fn chain_image(b: usize, n_qubits: usize) -> usize {
        let mut out = 0;
        let mut acc = 0;
        for q in 0..n_qubits {
            acc ^= (b >> q) & 1;
            out |= acc << q;
        }
        out
    }

    /// Per-basis-state eigenvalue of Σ_q σ_z^q, i.e. `n − 2·popcount(i)`.
    pub fn z_sum_weights(n_qubits: usize) -> Vec<f64> {
        (0..1usize << n_qubits)
            .map(|i| n_qubits as f64 - 2.0 * i.count_ones() as f64)
            .collect()
    }

    /// `Σ_i w_i a_i²`.
    #[inline]
    pub fn weighted_norm(amps: &[f64], weights: &[f64]) -> f64 {
        amps.iter().zip(weights).map(|(a, w)| w * a * a).sum()
    }

    /// `(Σ w u², Σ w u v, Σ w v²)` in one pass.
    #[inline]
    pub fn weighted_quadratic_forms(u: &[f64], v: &[f64], weights: &[f64]) -> (f64, f64, f64) {
        let mut uu = 0.0;
        let mut uv = 0.0;
        let mut vv = 0.0;
        for ((a, b), w) in u.iter().zip(v).zip(weights) {
            uu += w * a * a;
            uv += w * a * b;
            vv += w * b * b;
        }
        (uu, uv, vv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn assert_amps(state: &StateVector, expected: &[f64]) {
        assert_eq!(state.amplitudes().len(), expected.len());
        for (a, e) in state.amplitudes().iter().zip(expected) {
            assert!((a - c(*e)).norm() < 1e-12, "{a} vs {e}");
        }
    }

    #[test]
    fn zero_state_shapes() {
        assert_amps(&StateVector::zero_state(1).unwrap(), &[1.0, 0.0]);
        let s = StateVector::zero_state(3).unwrap();
        assert_amps(&s, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let s = StateVector::zero_state(14).unwrap();
        assert_eq!(s.amplitudes().len(), 16384);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_state_rejects_out_of_range() {
        assert!(matches!(StateVector::zero_state(0), Err(Error::Size(0))));
        assert!(matches!(StateVector::zero_state(25), Err(Error::Size(25))));
    }

    #[test]
    fn ry_examples() {
        let mut s = StateVector::zero_state(2).unwrap();
        s.apply_ry(1, 0.7).unwrap();
        let before = s.clone();
        s.apply_ry(0, 0.0).unwrap();
        assert_eq!(s, before);

        let mut s = StateVector::zero_state(1).unwrap();
        s.apply_ry(0, PI).unwrap();
        assert_amps(&s, &[0.0, 1.0]);

        let mut s = StateVector::zero_state(1).unwrap();
        s.apply_ry(0, PI / 2.0).unwrap();
        assert_amps(&s, &[FRAC_1_SQRT_2, FRAC_1_SQRT_2]);
    }

    #[test]
    fn ry_errors() {
        let mut s = StateVector::zero_state(2).unwrap();
        assert!(matches!(s.apply_ry(2, 0.1), Err(Error::Index { .. })));
        assert!(matches!(s.apply_ry(0, f64::NAN), Err(Error::Argument(_))));
    }

    #[test]
    fn cnot_examples() {
        // |10⟩: qubit 1 set, basis index 2
        let mut s = StateVector::zero_state(2).unwrap();
        s.apply_ry(1, PI).unwrap();
        s.apply_cnot(1, 0).unwrap();
        assert_amps(&s, &[0.0, 0.0, 0.0, 1.0]);

        let mut s = StateVector::zero_state(2).unwrap();
        s.apply_cnot(1, 0).unwrap();
        assert_amps(&s, &[1.0, 0.0, 0.0, 0.0]);

        let mut s = StateVector::zero_state(2).unwrap();
        s.apply_ry(1, PI / 2.0).unwrap();
        s.apply_cnot(1, 0).unwrap();
        assert_amps(&s, &[FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2]);
    }

    #[test]
    fn cnot_errors() {
        let mut s = StateVector::zero_state(3).unwrap();
        assert!(matches!(s.apply_cnot(1, 1), Err(Error::Argument(_))));
        assert!(matches!(s.apply_cnot(3, 0), Err(Error::Index { .. })));
        assert!(matches!(s.apply_cnot(0, 7), Err(Error::Index { .. })));
    }

    #[test]
    fn cnot_is_involution() {
        let mut s = StateVector::zero_state(3).unwrap();
        for (q, t) in [(0, 0.3), (1, 1.1), (2, 2.9)] {
            s.apply_ry(q, t).unwrap();
        }
        let before = s.clone();
        s.apply_cnot(2, 0).unwrap();
        assert_ne!(s, before);
        s.apply_cnot(2, 0).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn expectation_examples() {
        let s = StateVector::zero_state(1).unwrap();
        assert_eq!(s.expectation_z(0).unwrap(), 1.0);
        let mut s = StateVector::zero_state(1).unwrap();
        s.apply_ry(0, PI).unwrap();
        assert!((s.expectation_z(0).unwrap() + 1.0).abs() < 1e-15);
        for theta in [0.1, 1.0, 2.5, -3.0] {
            let mut s = StateVector::zero_state(1).unwrap();
            s.apply_ry(0, theta).unwrap();
            assert!((s.expectation_z(0).unwrap() - theta.cos()).abs() < 1e-14);
        }
        assert!(matches!(s.expectation_z(1), Err(Error::Index { .. })));
    }

    #[test]
    fn sum_expectation_examples() {
        for n in 1..6 {
            let s = StateVector::zero_state(n).unwrap();
            assert_eq!(s.sum_expectation_z(), n as f64);
        }
        let mut bell = StateVector::zero_state(2).unwrap();
        bell.apply_ry(1, PI / 2.0).unwrap();
        bell.apply_cnot(1, 0).unwrap();
        assert!(bell.sum_expectation_z().abs() < 1e-15);
    }

    #[test]
    fn real_kernels_match_complex_gates() {
        let n = 5;
        let thetas = [0.3, -1.2, 2.2, 0.9, 3.7];
        let mut s = StateVector::zero_state(n).unwrap();
        for (q, &t) in thetas.iter().enumerate() {
            s.apply_ry(q, t).unwrap();
        }
        let half: Vec<_> = thetas
            .iter()
            .map(|t| ((0.5 * t).cos(), (0.5 * t).sin()))
            .collect();
        let mut r = vec![0.0; 1 << n];
        real::product_state(&half, &mut r);
        for (a, b) in s.amplitudes().iter().zip(&r) {
            assert!((a.re - b).abs() < 1e-14 && a.im == 0.0);
        }

        s.apply_ry(3, 0.77).unwrap();
        real::ry(&mut r, 3, (0.385f64).cos(), (0.385f64).sin());
        for q in 0..n - 1 {
            s.apply_cnot(q, q + 1).unwrap();
        }
        let mut chained = vec![0.0; 1 << n];
        real::cnot_chain(&r, &mut chained);
        for (a, b) in s.amplitudes().iter().zip(&chained) {
            assert!((a.re - b).abs() < 1e-14);
        }

        let w = real::z_sum_weights(n);
        assert!((real::weighted_norm(&chained, &w) - s.sum_expectation_z()).abs() < 1e-13);

        // the chain image reproduces the gather
        let mut scattered = vec![0.0; 1 << n];
        for (b, &a) in r.iter().enumerate() {
            scattered[real::chain_image(b, n)] = a;
        }
        assert_eq!(scattered, chained);

        s.apply_ry(2, PI).unwrap();
        real::ry_pi(&mut chained, 2);
        for (a, b) in s.amplitudes().iter().zip(&chained) {
            assert!((a.re - b).abs() < 1e-14);
        }
    }

    #[test]
    fn blocked_layers_match_gate_by_gate() {
        let n = 14;
        let dim = 1usize << n;
        let start: Vec<f64> = (0..dim).map(|i| ((i as f64) * 0.618).sin()).collect();
        let gates: Vec<real::RyGate> = (0..n)
            .map(|q| {
                let t = 0.3 + q as f64 * 0.41;
                (q, (0.5 * t).cos(), (0.5 * t).sin())
            })
            .collect();
        let mut reference = start.clone();
        for &(q, c, s) in &gates {
            real::ry(&mut reference, q, c, s);
        }
        let mut blocked = start.clone();
        real::ry_layer(&mut blocked, &gates);
        let diff = reference
            .iter()
            .zip(&blocked)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12, "{diff}");

        // a partial layer, as used when a suffix starts mid-block
        let mut gathered = vec![0.0; dim];
        real::cnot_chain(&start, &mut gathered);
        for &(q, c, s) in &gates[5..] {
            real::ry(&mut gathered, q, c, s);
        }
        let mut fused = vec![0.0; dim];
        real::cnot_chain_then_ry_layer(&start, &mut fused, &gates[5..]);
        let diff = gathered
            .iter()
            .zip(&fused)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12, "{diff}");
    }
}
