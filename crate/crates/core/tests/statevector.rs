mod common;

use common::Gate;
use num_complex::Complex64;
use proptest::prelude::*;
use qnn_regress::statevector::StateVector;

fn gate_strategy(n: usize) -> impl Strategy<Value = Gate> {
    let ry = (0..n, -10.0..10.0f64).prop_map(|(q, t)| Gate::Ry(q, t));
    let cnot = (0..n, 1..n).prop_map(move |(c, shift)| Gate::Cnot(c, (c + shift) % n));
    prop_oneof![ry, cnot]
}

fn circuit(max_qubits: usize, max_gates: usize) -> impl Strategy<Value = (usize, Vec<Gate>)> {
    (2..=max_qubits).prop_flat_map(move |n| {
        (
            Just(n),
            prop::collection::vec(gate_strategy(n), 0..=max_gates),
        )
    })
}

fn apply(state: &mut StateVector, gates: &[Gate]) {
    for &g in gates {
        match g {
            Gate::Ry(q, t) => state.apply_ry(q, t).unwrap(),
            Gate::Cnot(c, t) => state.apply_cnot(c, t).unwrap(),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn matches_dense_kronecker_oracle((n, gates) in circuit(4, 20)) {
        let mut s = StateVector::zero_state(n).unwrap();
        apply(&mut s, &gates);
        let expected = common::run(n, &gates, common::zero_state(n));
        for (a, b) in s.amplitudes().iter().zip(expected.iter()) {
            prop_assert!((a - b).norm() < 1e-10, "{a} vs {b}");
        }
        for q in 0..n {
            let z = s.expectation_z(q).unwrap();
            prop_assert!((z - common::z_expectation(n, &expected, q)).abs() < 1e-10);
        }
    }

    #[test]
    fn norm_is_preserved((n, gates) in circuit(6, 100)) {
        let mut s = StateVector::zero_state(n).unwrap();
        apply(&mut s, &gates);
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn z_readouts_are_consistent((n, gates) in circuit(6, 40)) {
        let mut s = StateVector::zero_state(n).unwrap();
        apply(&mut s, &gates);
        let mut total = 0.0;
        for q in 0..n {
            let z = s.expectation_z(q).unwrap();
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&z));
            total += z;
        }
        prop_assert!((s.sum_expectation_z() - total).abs() < 1e-12);
    }

    #[test]
    fn cnot_is_an_involution(
        (n, gates) in circuit(5, 30),
        pick in (0usize..100, 1usize..100),
    ) {
        let mut s = StateVector::zero_state(n).unwrap();
        apply(&mut s, &gates);
        let before = s.clone();
        let c = pick.0 % n;
        let t = (c + 1 + pick.1 % (n - 1)) % n;
        s.apply_cnot(c, t).unwrap();
        s.apply_cnot(c, t).unwrap();
        prop_assert_eq!(s, before);
    }

    #[test]
    fn complex_inputs_match_oracle(
        (n, gates) in circuit(3, 12),
        seed_amps in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 8),
    ) {
        let amps: Vec<Complex64> = seed_amps[..1 << n].iter().map(|&(r, i)| Complex64::new(r, i)).collect();
        let mut s = StateVector::from_amplitudes(amps.clone()).unwrap();
        apply(&mut s, &gates);
        let expected = common::run(n, &gates, nalgebra::DVector::from_vec(amps));
        for (a, b) in s.amplitudes().iter().zip(expected.iter()) {
            prop_assert!((a - b).norm() < 1e-10);
        }
    }
}
