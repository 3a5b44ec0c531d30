//! Library results checked against independently built references.

mod common;

use common::{Drive, RotatingFrame, DOWN, UP};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use rfdress::analysis::{fit_decay, DecayModel};
use rfdress::dynamics::{
    default_step, evolve, fock_convergence, noise_average, EvolveOptions, Observable, Protocol, Segment,
};
use rfdress::hamiltonian::{build_h1, build_h2_at, build_noise, exchange_op, DriveParams, NoiseParams};
use rfdress::hilbert::{
    basis_state, expectation, make_space, named_internal, named_state, transition_op, Level, NamedState, Pair,
    SpaceConfig, StateVector,
};

fn params(d: &Drive) -> DriveParams {
    DriveParams::new(d.omega1, d.eta_omega2, d.delta).unwrap().with_phases(d.phase_rf, d.phase_opt)
}

fn to_dense(m: &ndarray::Array2<C64>) -> DMatrix<C64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[[i, j]])
}

fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn random_state(space: SpaceConfig, seed: u64) -> StateVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = ndarray::Array1::from_shape_fn(space.dim(), |_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    StateVector::normalized(space, v).unwrap()
}

#[test]
fn drive_hamiltonians_match_elementwise_construction() {
    let mut d = Drive::hz(300e3, 20e3, 40e3);
    d.phase_rf = 0.4;
    d.phase_opt = -1.3;
    let n_max = 5;
    let sp = make_space(2, n_max).unwrap();
    let p = params(&d);
    let scale = d.omega1;
    assert!(max_abs_diff(&to_dense(build_h1(sp, &p).entries()), &common::h1(n_max, &d).dense()) < 1e-12 * scale);
    let b = common::sideband(n_max, &d).dense();
    for t in [0.0, 1.7e-6, 3.3e-5, 4.1e-4] {
        let ph = C64::from_polar(1.0, d.delta * t);
        let want = &b * ph + b.adjoint() * ph.conj();
        let got = to_dense(build_h2_at(sp, &p, t).entries());
        assert!(max_abs_diff(&got, &want) < 1e-12 * scale, "t = {t}");
    }
}

#[test]
fn transition_plus_dagger_has_spectrum_minus_one_zero_one() {
    let sp = make_space(2, 2).unwrap();
    let third = sp.dim() / 3;
    for pair in [Pair::Qubit, Pair::Optical, Pair::Composite] {
        for ion in 0..2 {
            let op = transition_op(sp, pair, ion).unwrap();
            let m = to_dense(op.plus_dagger().entries());
            let mut ev: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().cloned().collect();
            ev.sort_by(f64::total_cmp);
            for (k, v) in ev.iter().enumerate() {
                let want = [-1.0, 0.0, 1.0][k / third];
                assert!((v - want).abs() < 1e-12, "{pair} ion {ion}: {v}");
            }
        }
    }
}

#[test]
fn sigma_x_expectation_matches_explicit_sum() {
    let n_max = 3;
    let sp = make_space(2, n_max).unwrap();
    let op = transition_op(sp, Pair::Qubit, 0).unwrap().plus_dagger();
    for seed in 0..5 {
        let s = random_state(sp, seed);
        let psi = s.amplitudes();
        let mut want = C64::new(0.0, 0.0);
        for i in 0..sp.dim() {
            let (l1, l2, n) = common::labels(i, n_max);
            let partner = match l1 {
                DOWN => UP,
                UP => DOWN,
                _ => continue,
            };
            want += psi[i].conj() * psi[common::index(partner, l2, n, n_max)];
        }
        let got = expectation(&s, &op).unwrap();
        assert!((got - want).norm() < 1e-14);
        assert_eq!(got.im, 0.0);
    }
}

fn rk4_against_rotating_frame(d: Drive, n_max: usize, duration: f64, checkpoints: usize) {
    let sp = make_space(2, n_max).unwrap();
    let p = params(&d);
    let init = basis_state(sp, &[Level::A, Level::A], 0).unwrap();
    let opts = EvolveOptions { dt: default_step(&p), sample_every: duration / checkpoints as f64, keep_states: true };
    let (_, traj) = evolve(&init, &p, duration, &opts).unwrap();
    let oracle = RotatingFrame::new(n_max, &d);
    let psi0: Vec<C64> = init.amplitudes().to_vec();
    let snaps = traj.snapshots.unwrap();
    assert_eq!(snaps.len(), checkpoints + 1);
    for (s, snap) in traj.samples.iter().zip(&snaps) {
        let exact = oracle.evolve(&psi0, s.t);
        let ov = common::overlap(&exact, snap.amplitudes().as_slice().unwrap());
        assert!(ov > 1.0 - 1e-8, "t = {}: overlap {ov}", s.t);
    }
}

#[test]
fn rk4_matches_rotating_frame_solution_strong_dressing() {
    rk4_against_rotating_frame(Drive::hz(300e3, 20e3, 40e3), 10, 1.2e-3, 12);
}

#[test]
fn rk4_matches_rotating_frame_solution_experimental_with_phases() {
    let mut d = Drive::hz(10.5e3, 8.8e3, 17.6e3);
    d.phase_rf = 0.7;
    d.phase_opt = 2.1;
    rk4_against_rotating_frame(d, 12, 1e-3, 10);
}

#[test]
fn rk4_matches_piecewise_exponential_short_window() {
    let d = Drive::hz(10.5e3, 8.8e3, 17.6e3);
    let n_max = 8;
    let sp = make_space(2, n_max).unwrap();
    let p = params(&d);
    let init = basis_state(sp, &[Level::A, Level::A], 0).unwrap();
    let dt = default_step(&p);
    let duration = 100e-6;
    let (fin, _) = evolve(&init, &p, duration, &EvolveOptions { dt, sample_every: duration, keep_states: false }).unwrap();
    let oracle = common::piecewise_exponential(n_max, &d, init.amplitudes().as_slice().unwrap(), duration, dt / 10.0);
    let ov = common::overlap(&oracle, fin.amplitudes().as_slice().unwrap());
    assert!(ov > 1.0 - 1e-10, "{ov}");
}

#[test]
fn rf_only_energy_is_conserved() {
    let sp = make_space(2, 2).unwrap();
    let p = DriveParams::from_hz(300e3, 0.0, 0.0).unwrap().with_phases(0.3, 0.0);
    let init = random_state(sp, 42);
    let h = build_h1(sp, &p);
    let e0 = expectation(&init, &h).unwrap().re;
    let opts = EvolveOptions { dt: default_step(&p), sample_every: 1e-4, keep_states: true };
    let (_, traj) = evolve(&init, &p, 1e-3, &opts).unwrap();
    for s in traj.snapshots.unwrap() {
        let e = expectation(&s, &h).unwrap().re;
        assert!(((e - e0) / e0).abs() < 1e-8, "{e} vs {e0}");
    }
}

#[test]
fn dark_state_is_stationary_under_rf() {
    let sp = make_space(2, 2).unwrap();
    let p = DriveParams::from_hz(300e3, 0.0, 0.0).unwrap();
    let init = named_state(sp, NamedState::Psi1, 0).unwrap();
    let (fin, _) = evolve(&init, &p, 1e-3, &EvolveOptions::for_params(&p, 1e-4)).unwrap();
    assert!(init.inner(&fin).unwrap().norm() > 1.0 - 1e-8);
}

#[test]
fn strong_dressing_reduces_motional_excitation() {
    let sp = make_space(2, 10).unwrap();
    let init = basis_state(sp, &[Level::A, Level::A], 0).unwrap();
    let max_n = |omega1_hz: f64| {
        let p = DriveParams::from_hz(omega1_hz, 8.8e3, 17.6e3).unwrap();
        let (_, t) = evolve(&init, &p, 300e-6, &EvolveOptions::for_params(&p, 1e-6)).unwrap();
        t.samples.iter().map(|s| s.n_mean).fold(0.0, f64::max)
    };
    let ms = max_n(0.0);
    for ratio in [10.0, 12.0] {
        let dressed = max_n(ratio * 8.8e3);
        assert!(dressed < ms, "ratio {ratio}: {dressed} vs {ms}");
    }
}

#[test]
fn ms_gate_needs_only_a_small_cutoff() {
    let p = DriveParams::from_hz(0.0, 8.8e3, 17.6e3).unwrap();
    let report = fock_convergence(
        |sp| {
            let s = basis_state(sp, &[Level::A, Level::A], 0)?;
            Ok(Protocol::new(s, vec![Segment::Drive { params: p, duration: 1.0 / 17.6e3 }], 1e-6))
        },
        2,
        &[6, 8, 10, 12],
        1e-4,
    )
    .unwrap();
    assert!(report.steps.iter().filter(|s| s.n_max >= 10).all(|s| s.max_change < 1e-4), "{report:?}");
    let sp = make_space(2, 10).unwrap();
    let init = basis_state(sp, &[Level::A, Level::A], 0).unwrap();
    let (_, t) = evolve(&init, &p, 1.0 / 17.6e3, &EvolveOptions::for_params(&p, 1e-6)).unwrap();
    assert!(t.samples.iter().all(|s| s.n_mean <= 1.0));
}

#[test]
fn exchange_symmetry_of_all_terms() {
    let sp = make_space(2, 4).unwrap();
    let x = exchange_op(sp).unwrap();
    let p = DriveParams::from_hz(10.5e3, 8.8e3, 17.6e3).unwrap().with_phases(0.9, -0.4);
    assert!(build_h1(sp, &p).commutator_norm(&x) < 1e-12);
    assert!(build_noise(sp, 2.0 * PI * 30.0).commutator_norm(&x) < 1e-12);
    for t in [0.0, 1.3e-5, 7.7e-5] {
        assert!(build_h2_at(sp, &p, t).commutator_norm(&x) < 1e-12);
    }
}

fn bare_protocol(tau: f64) -> Protocol {
    let sp = make_space(2, 1).unwrap();
    let init = named_state(sp, NamedState::Psi1, 0).unwrap();
    Protocol::new(init, vec![Segment::Wait { duration: tau, dressing_on: false, noise_on: true }], tau / 8.0)
}

#[test]
fn bare_dephasing_follows_gaussian_oracle() {
    let sigma = 2.0 * PI * 40.0;
    let tau = 8e-3;
    let noise = NoiseParams::new(sigma, 4000, 7).unwrap();
    let obs = Observable::Fidelity(named_internal(NamedState::Psi1));
    let pts = noise_average(&bare_protocol(tau), &noise, &obs).unwrap();
    for p in &pts {
        let want = 0.5 * (1.0 + (-2.0 * sigma * sigma * p.t * p.t).exp());
        assert!((p.mean - want).abs() < 0.02 * want, "t = {}: {} vs {}", p.t, p.mean, want);
        assert!((p.mean - want).abs() < 5.0 * p.stderr + 1e-12);
    }
}

#[test]
fn doubling_noise_halves_coherence_time() {
    let obs = Observable::Fidelity(named_internal(NamedState::Psi1));
    let t_of = |sigma: f64, tau_max: f64| {
        let pts = noise_average(&bare_protocol(tau_max), &NoiseParams::new(sigma, 2000, 3).unwrap(), &obs).unwrap();
        let taus: Vec<f64> = pts.iter().map(|p| p.t).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.mean).collect();
        fit_decay(&taus, &ys, DecayModel::Gaussian).unwrap().coherence_time
    };
    let sigma = 2.0 * PI * 30.0;
    let t1 = t_of(sigma, 16e-3);
    let t2 = t_of(2.0 * sigma, 8e-3);
    assert!((t2 / t1 - 0.5).abs() < 0.03, "{t1} {t2}");
    assert!((t1 - 1.0 / (2f64.sqrt() * sigma)).abs() < 0.03 * t1);
}

#[test]
fn noise_average_is_deterministic() {
    let obs = Observable::Fidelity(named_internal(NamedState::Psi1));
    let noise = NoiseParams::new(2.0 * PI * 25.0, 300, 99).unwrap();
    let a = noise_average(&bare_protocol(5e-3), &noise, &obs).unwrap();
    let b = noise_average(&bare_protocol(5e-3), &noise, &obs).unwrap();
    assert_eq!(a, b);
    let other = noise_average(&bare_protocol(5e-3), &NoiseParams { seed: 100, ..noise }, &obs).unwrap();
    assert_ne!(a, other);
}
