use ndarray::Array1;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use std::f64::consts::PI;

use rfdress::analysis::{bell_fidelity, fit_sinusoid, parity, parity_scan, state_fidelity};
use rfdress::dynamics::ideal_pulse;
use rfdress::hamiltonian::{build_h2_at, DriveParams};
use rfdress::hilbert::{make_space, InternalState, Pair, StateVector};

fn pair_strategy() -> impl Strategy<Value = Pair> {
    prop_oneof![Just(Pair::Qubit), Just(Pair::Optical), Just(Pair::Composite)]
}

fn state_strategy(n_max: usize) -> impl Strategy<Value = StateVector> {
    let dim = 9 * (n_max + 1);
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim)
        .prop_filter("nonzero", |v| v.iter().map(|(a, b)| a * a + b * b).sum::<f64>() > 1e-3)
        .prop_map(move |v| {
            let amps = Array1::from_iter(v.into_iter().map(|(a, b)| C64::new(a, b)));
            StateVector::normalized(make_space(2, n_max).unwrap(), amps).unwrap()
        })
}

fn uniform_thetas(n: usize, shift: f64) -> Vec<f64> {
    (0..n).map(|k| shift + 2.0 * PI * k as f64 / n as f64).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parity_ignores_global_phase(s in state_strategy(2), phase in -PI..PI, pair in pair_strategy()) {
        let p0 = parity(&s, pair);
        let p1 = parity(&s.scaled_phase(phase), pair);
        prop_assert!((p0 - p1).abs() < 1e-12);
        prop_assert!(p0.abs() <= 1.0 + 1e-12);
    }

    #[test]
    fn fitted_amplitude_ignores_scan_offset(s in state_strategy(1), shift in -PI..PI, pair in pair_strategy()) {
        let a = fit_sinusoid(&parity_scan(&s, pair, &uniform_thetas(32, 0.0)).unwrap()).unwrap();
        let b = fit_sinusoid(&parity_scan(&s, pair, &uniform_thetas(32, shift)).unwrap()).unwrap();
        prop_assert!((a.amplitude - b.amplitude).abs() < 1e-9, "{} vs {}", a.amplitude, b.amplitude);
    }

    #[test]
    fn bell_estimator_agrees_with_direct_fidelity(
        theta in 0.0..PI / 2.0,
        chi in -PI..PI,
        leak in 0.0f64..0.3,
    ) {
        // cos θ|↑↑⟩ + e^{iχ} sin θ|↓↓⟩ with some weight left in |aa⟩
        let keep = (1.0 - leak * leak).sqrt();
        let mut amps = Array1::zeros(9);
        amps[0] = C64::new(leak, 0.0);
        amps[4] = C64::from_polar(keep * theta.sin(), chi);
        amps[8] = C64::new(keep * theta.cos(), 0.0);
        let internal = InternalState::new(2, amps.clone()).unwrap();
        let space = make_space(2, 1).unwrap();
        let s = StateVector::from_internal(space, &internal, 0).unwrap();

        let scan = parity_scan(&s, Pair::Qubit, &uniform_thetas(32, 0.0)).unwrap();
        let fit = fit_sinusoid(&scan).unwrap();
        let pops = s.internal_populations();
        let est = bell_fidelity(pops[8], pops[4], fit.amplitude.min(1.0)).unwrap();

        let mut target = Array1::zeros(9);
        target[4] = C64::from_polar(1.0, chi);
        target[8] = C64::new(1.0, 0.0);
        let target = InternalState::normalized(2, target).unwrap();
        let direct = state_fidelity(&s, &target).unwrap();
        prop_assert!((est.value - direct).abs() < 0.01, "{} vs {}", est.value, direct);
    }

    #[test]
    fn sideband_hamiltonian_is_hermitian(
        o1 in 0.0f64..5e5, eo2 in 0.0f64..5e4, d in 0.0f64..1e5,
        prf in -PI..PI, popt in -PI..PI, t in 0.0f64..1e-3,
    ) {
        let sp = make_space(2, 3).unwrap();
        let p = DriveParams::from_hz(o1, eo2, d).unwrap().with_phases(prf, popt);
        let h = build_h2_at(sp, &p, t);
        prop_assert!(h.is_hermitian());
        let scale = 2.0 * PI * eo2 * 2.0 + 1.0;
        prop_assert!(h.hermiticity_error() < 1e-12 * scale);
    }

    #[test]
    fn pulses_preserve_norm(
        s in state_strategy(1), pair in pair_strategy(),
        angle in -2.0 * PI..2.0 * PI, phase in -PI..PI, which in 0usize..3,
    ) {
        let ions: Vec<usize> = match which { 0 => vec![0], 1 => vec![1], _ => vec![0, 1] };
        let out = ideal_pulse(&s, pair, angle, phase, &ions).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-12);
    }
}
