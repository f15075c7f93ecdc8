mod common;

use common::{ginibre_state, random_qubit_unitary, rng};
use entshape::channels::{amplitude_damping, depolarizing, measure_and_discard, DDConfig, QuantumChannel};
use entshape::qstate::{gates, BellDiagonalState, ComplexMatrix, DensityMatrix};
use proptest::prelude::*;

fn completeness_defect(ch: &QuantumChannel) -> f64 {
    let d = ch.dim();
    let mut sum = ComplexMatrix::zeros(d, d);
    for k in ch.kraus() {
        sum = &sum + &(&k.dagger() * k);
    }
    sum.max_abs_diff(&ComplexMatrix::identity(d))
}

fn sample_channels() -> Vec<QuantumChannel> {
    let mut v = vec![measure_and_discard(), QuantumChannel::identity(2)];
    for x in [0.0, 0.1, 0.3, 0.5, 0.75] {
        v.push(depolarizing(x).unwrap());
    }
    for g in [0.0, 0.2, 0.5, 1.0] {
        v.push(amplitude_damping(g).unwrap());
    }
    v.push(
        amplitude_damping(0.3)
            .unwrap()
            .then(&depolarizing(0.1).unwrap())
            .unwrap(),
    );
    v
}

#[test]
fn every_constructor_is_trace_preserving() {
    for ch in sample_channels() {
        assert!(completeness_defect(&ch) < 1e-10, "{:?}", ch.family());
    }
}

#[test]
fn apply_keeps_states_valid() {
    let mut r = rng(3);
    let channels = sample_channels();
    for _ in 0..100 {
        let rho = ginibre_state(&mut r, 4, 4, vec![2, 2]);
        for ch in &channels {
            for target in [0, 1] {
                let out = ch.apply(&rho, target).unwrap();
                assert!((out.matrix().trace().re - 1.0).abs() < 1e-12);
                assert!(out.eigenvalues().iter().all(|&x| x > -1e-12));
            }
        }
    }
}

#[test]
fn depolarizing_choi_is_bell_diagonal() {
    for k in 0..=30 {
        let p = 0.75 * k as f64 / 30.0;
        let choi = depolarizing(p).unwrap().choi().unwrap();
        let bd = BellDiagonalState::from_density(&choi, 1e-12).unwrap();
        assert!((bd.fidelity() - (1.0 - p)).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parametric_dd_is_monotone(
        p in 0.01f64..0.75,
        g1 in 0.0f64..3.0,
        dg in 0.0f64..3.0,
        f1 in 0.1f64..10.0,
        df in 0.0f64..10.0,
    ) {
        let ch = depolarizing(p).unwrap();
        let eff = |gamma: f64, f: f64| {
            let out = ch.dd_effective_parametric(&DDConfig::parametric(f, gamma)).unwrap();
            1.0 - BellDiagonalState::twirl(&out.choi().unwrap()).unwrap().fidelity()
        };
        let base = eff(g1, f1);
        prop_assert!(eff(g1 + dg, f1) <= base + 1e-12);
        prop_assert!(eff(g1, f1 + df) >= base - 1e-12);
        prop_assert!(base <= p + 1e-12);
    }

    #[test]
    fn pauli_pulse_average_twirls_any_channel(seed in any::<u64>(), gamma in 0.0f64..1.0, p in 0.0f64..0.75) {
        let mut r = rng(seed);
        let u = random_qubit_unitary(&mut r);
        let ch = amplitude_damping(gamma)
            .unwrap()
            .then(&depolarizing(p).unwrap())
            .unwrap()
            .precomposed_with(&u)
            .unwrap();
        for frame_corrected in [false, true] {
            let mut cfg = DDConfig::pulse_average(4, gates::paulis().to_vec());
            cfg.frame_corrected = frame_corrected;
            let avg = ch.dd_effective_pulse_average(&cfg).unwrap();
            let choi = avg.choi().unwrap();
            if frame_corrected {
                prop_assert!(BellDiagonalState::from_density(&choi, 1e-10).is_ok());
            } else {
                // Averaging the input over all Paulis erases it.
                let expected = DensityMatrix::maximally_mixed(vec![2]);
                let out = avg.apply(&ginibre_state(&mut r, 2, 2, vec![2]), 0).unwrap();
                let fixed = ch.apply(&expected, 0).unwrap();
                prop_assert!(out.matrix().max_abs_diff(fixed.matrix()) < 1e-12);
            }
        }
    }
}
