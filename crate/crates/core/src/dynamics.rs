//! Time evolution: fixed-step RK4 under `H1 + H2(t)`, ideal instantaneous
//! rotations, piecewise protocols and quasi-static noise averaging.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hamiltonian::{
    build_h1, build_h1_internal, build_noise_internal, sideband_coupling, DriveParams, NoiseParams,
};
use crate::hilbert::{
    named_internal, InternalState, Level, NamedState, Pair, SpaceConfig, StateVector, LEVELS_PER_ION,
};
use crate::linalg::{eigh, CsrMatrix};

/// Largest allowed step as a fraction of the fastest drive period.
pub const STEP_GUARD_FACTOR: f64 = 50.0;
/// Default step as a fraction of the fastest drive period.
pub const DEFAULT_STEP_FACTOR: f64 = 1000.0;
pub const NORM_DRIFT_TOL: f64 = 1e-8;

/// `1/(50 f_max)`; infinite when nothing is driven.
pub fn step_limit(params: &DriveParams) -> f64 {
    let f = params.max_frequency_hz();
    if f > 0.0 {
        1.0 / (STEP_GUARD_FACTOR * f)
    } else {
        f64::INFINITY
    }
}

/// `1/(1000 f_max)`, or 1 µs when nothing is driven.
pub fn default_step(params: &DriveParams) -> f64 {
    let f = params.max_frequency_hz();
    if f > 0.0 {
        1.0 / (DEFAULT_STEP_FACTOR * f)
    } else {
        1e-6
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Sample {
    pub t: f64,
    /// Population with every ion in |a⟩ (resp. |↓⟩, |↑⟩).
    pub p_aa: f64,
    pub p_dd: f64,
    pub p_uu: f64,
    /// Internal-state fidelity with |ψ1⟩; NaN unless there are two ions.
    pub p_psi1: f64,
    pub norm: f64,
    pub n_mean: f64,
}

impl Sample {
    pub fn of(t: f64, state: &StateVector) -> Sample {
        let space = state.space();
        let pops = state.internal_populations();
        let all = |l: Level| pops[space.internal_index(&vec![l; space.n_ions()]).expect("valid labels")];
        let p_psi1 = if space.n_ions() == 2 {
            state.internal_fidelity(&named_internal(NamedState::Psi1)).expect("two ions")
        } else {
            f64::NAN
        };
        Sample {
            t,
            p_aa: all(Level::A),
            p_dd: all(Level::Down),
            p_uu: all(Level::Up),
            p_psi1,
            norm: state.norm(),
            n_mean: state.mean_phonon(),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub snapshots: Option<Vec<StateVector>>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn column(&self, f: impl Fn(&Sample) -> f64) -> Vec<f64> {
        self.samples.iter().map(f).collect()
    }

    /// Largest `|norm − 1|` over all samples.
    pub fn max_norm_drift(&self) -> f64 {
        self.samples.iter().map(|s| (s.norm - 1.0).abs()).fold(0.0, f64::max)
    }

    fn push(&mut self, t: f64, state: &StateVector) {
        // a zero-duration operation overwrites the sample taken at the same instant
        if let Some(last) = self.samples.last() {
            if last.t == t {
                self.samples.pop();
                if let Some(s) = self.snapshots.as_mut() {
                    s.pop();
                }
            }
        }
        self.samples.push(Sample::of(t, state));
        if let Some(s) = self.snapshots.as_mut() {
            s.push(state.clone());
        }
    }
}

#[derive(Copy, Clone, Debug)]
pub struct EvolveOptions {
    pub dt: f64,
    pub sample_every: f64,
    pub keep_states: bool,
}

impl EvolveOptions {
    pub fn for_params(params: &DriveParams, sample_every: f64) -> Self {
        Self { dt: default_step(params), sample_every, keep_states: false }
    }
}

/// Time-dependent generator split as `H1 + e^{iδt} B + e^{-iδt} B†`.
struct Generator {
    h1: CsrMatrix,
    b: CsrMatrix,
    bd: CsrMatrix,
    delta: f64,
}

impl Generator {
    fn new(space: SpaceConfig, params: &DriveParams) -> Self {
        let b = sideband_coupling(space, params);
        Self {
            h1: CsrMatrix::from_dense(build_h1(space, params).entries()),
            bd: CsrMatrix::from_dense(b.dagger().entries()),
            b: CsrMatrix::from_dense(b.entries()),
            delta: params.delta,
        }
    }

    /// `out = −i H(t) x`
    fn rhs(&self, t: f64, x: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
        let mi = C64::new(0.0, -1.0);
        self.h1.mul_add(x, mi, out);
        let ph = C64::from_polar(1.0, self.delta * t);
        self.b.mul_add(x, mi * ph, out);
        self.bd.mul_add(x, mi * ph.conj(), out);
    }
}

fn check_duration(duration: f64) -> Result<()> {
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(Error::InvalidParameter { name: "duration", reason: format!("{duration} must be finite and >= 0") });
    }
    Ok(())
}

fn check_sampling(sample_every: f64) -> Result<()> {
    if !(sample_every > 0.0 && sample_every.is_finite()) {
        return Err(Error::InvalidParameter { name: "sample_every", reason: format!("{sample_every} must be > 0") });
    }
    Ok(())
}

/// Number of equal steps covering `duration` with steps no longer than `h`.
fn step_count(duration: f64, h: f64) -> usize {
    if duration == 0.0 {
        0
    } else {
        ((duration / h) * (1.0 - 1e-12)).ceil().max(1.0) as usize
    }
}

/// Integrates one drive window. `emit(t_local, state)` is called at the
/// start, every `sample_every` and at the end.
fn integrate<F>(
    state: &StateVector,
    params: &DriveParams,
    duration: f64,
    dt: f64,
    sample_every: f64,
    mut emit: F,
) -> Result<StateVector>
where
    F: FnMut(f64, &StateVector) -> Result<()>,
{
    params.validate()?;
    check_duration(duration)?;
    check_sampling(sample_every)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter { name: "dt", reason: format!("{dt} must be > 0") });
    }
    let limit = step_limit(params);
    if dt > limit {
        return Err(Error::StepTooLarge { dt, limit });
    }

    let space = state.space();
    let n_steps = step_count(duration, dt);
    let h = if n_steps == 0 { 0.0 } else { duration / n_steps as f64 };
    let stride = if n_steps == 0 { 1 } else { ((sample_every / h).round() as usize).max(1) };
    let norm0 = state.norm();

    emit(0.0, state)?;
    if n_steps == 0 {
        return Ok(state.clone());
    }

    let gen = Generator::new(space, params);
    let dim = space.dim();
    let mut psi: Vec<C64> = state.amplitudes().to_vec();
    let mut k = vec![C64::new(0.0, 0.0); dim];
    let mut acc = vec![C64::new(0.0, 0.0); dim];
    let mut tmp = vec![C64::new(0.0, 0.0); dim];

    for step in 1..=n_steps {
        let t = (step - 1) as f64 * h;
        // k1
        gen.rhs(t, &psi, &mut k);
        for i in 0..dim {
            acc[i] = k[i];
            tmp[i] = psi[i] + k[i] * (h / 2.0);
        }
        // k2
        gen.rhs(t + h / 2.0, &tmp, &mut k);
        for i in 0..dim {
            acc[i] += k[i] * 2.0;
            tmp[i] = psi[i] + k[i] * (h / 2.0);
        }
        // k3
        gen.rhs(t + h / 2.0, &tmp, &mut k);
        for i in 0..dim {
            acc[i] += k[i] * 2.0;
            tmp[i] = psi[i] + k[i] * h;
        }
        // k4
        gen.rhs(t + h, &tmp, &mut k);
        for i in 0..dim {
            acc[i] += k[i];
            psi[i] += acc[i] * (h / 6.0);
        }

        if step % stride == 0 || step == n_steps {
            let t_now = if step == n_steps { duration } else { step as f64 * h };
            let current = StateVector::from_evolved(space, Array1::from(psi.clone()));
            let drift = (current.norm() - norm0).abs();
            if drift > NORM_DRIFT_TOL {
                return Err(Error::NormDrift { drift, t: t_now });
            }
            emit(t_now, &current)?;
        }
    }
    Ok(StateVector::from_evolved(space, Array1::from(psi)))
}

/// Evolves `state` under `H1 + H2(t)` for `duration` seconds, with the
/// sideband phase referenced to the start of the window.
pub fn evolve(
    state: &StateVector,
    params: &DriveParams,
    duration: f64,
    opts: &EvolveOptions,
) -> Result<(StateVector, Trajectory)> {
    let mut traj = Trajectory { samples: Vec::new(), snapshots: opts.keep_states.then(Vec::new) };
    let last = integrate(state, params, duration, opts.dt, opts.sample_every, |t, s| {
        traj.push(t, s);
        Ok(())
    })?;
    Ok((last, traj))
}

/// Single-ion rotation `exp(−i(θ/2)(cos φ σx + sin φ σy))` on `pair`, with
/// `σ⁺ = |upper⟩⟨lower|` so that `cos φ σx + sin φ σy = e^{iφ}σ⁺ + h.c.`.
pub fn rotation(pair: Pair, angle: f64, phase: f64) -> Result<Array2<C64>> {
    if !angle.is_finite() || !phase.is_finite() {
        return Err(Error::InvalidParameter { name: "angle", reason: "angle and phase must be finite".into() });
    }
    let (u, l, s) = (pair.upper().index(), pair.lower().index(), pair.spectator().index());
    let c = (angle / 2.0).cos();
    let sn = (angle / 2.0).sin();
    let mut m = Array2::zeros((3, 3));
    m[[s, s]] = C64::new(1.0, 0.0);
    m[[u, u]] = C64::new(c, 0.0);
    m[[l, l]] = C64::new(c, 0.0);
    m[[u, l]] = C64::new(0.0, -sn) * C64::from_polar(1.0, phase);
    m[[l, u]] = C64::new(0.0, -sn) * C64::from_polar(1.0, -phase);
    Ok(m)
}

/// Applies a 3×3 single-ion operator to `ion` in place.
fn apply_local(space: SpaceConfig, amps: &mut [C64], ion: usize, u: &Array2<C64>) {
    let stride = LEVELS_PER_ION.pow((space.n_ions() - 1 - ion) as u32) * space.fock_dim();
    let block = LEVELS_PER_ION * stride;
    for base in (0..amps.len()).step_by(block) {
        for r in 0..stride {
            let v = [amps[base + r], amps[base + stride + r], amps[base + 2 * stride + r]];
            for row in 0..3 {
                amps[base + row * stride + r] = u[[row, 0]] * v[0] + u[[row, 1]] * v[1] + u[[row, 2]] * v[2];
            }
        }
    }
}

pub fn ideal_pulse(state: &StateVector, pair: Pair, angle: f64, phase: f64, ions: &[usize]) -> Result<StateVector> {
    let space = state.space();
    if ions.is_empty() {
        return Err(Error::InvalidParameter { name: "ions", reason: "pulse must address at least one ion".into() });
    }
    for &ion in ions {
        if ion >= space.n_ions() {
            return Err(Error::IonOutOfRange { index: ion, n_ions: space.n_ions() });
        }
    }
    let u = rotation(pair, angle, phase)?;
    let mut amps = state.amplitudes().to_vec();
    for &ion in ions {
        apply_local(space, &mut amps, ion, &u);
    }
    Ok(StateVector::from_evolved(space, Array1::from(amps)))
}

/// Applies an internal-space operator (dimension `3^N`) to every Fock block.
fn apply_internal(space: SpaceConfig, amps: &[C64], u: &Array2<C64>) -> Vec<C64> {
    let f = space.fock_dim();
    let d = space.internal_dim();
    let mut out = vec![C64::new(0.0, 0.0); amps.len()];
    for i in 0..d {
        for j in 0..d {
            let uij = u[[i, j]];
            if uij == C64::new(0.0, 0.0) {
                continue;
            }
            for n in 0..f {
                out[i * f + n] += uij * amps[j * f + n];
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub enum Segment {
    Drive { params: DriveParams, duration: f64 },
    /// Free evolution, optionally under the protocol's rf dressing and the
    /// shot's Zeeman offset.
    Wait { duration: f64, dressing_on: bool, noise_on: bool },
    Pulse { pair: Pair, angle: f64, phase: f64, ions: Vec<usize> },
}

impl Segment {
    pub fn pi_pulse(pair: Pair, n_ions: usize) -> Segment {
        Segment::Pulse { pair, angle: std::f64::consts::PI, phase: 0.0, ions: (0..n_ions).collect() }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Segment::Drive { params, duration } => {
                params.validate()?;
                check_duration(*duration)
            }
            Segment::Wait { duration, .. } => check_duration(*duration),
            Segment::Pulse { angle, phase, ions, .. } => {
                if !angle.is_finite() || !phase.is_finite() {
                    return Err(Error::InvalidParameter { name: "angle", reason: "must be finite".into() });
                }
                if ions.is_empty() {
                    return Err(Error::InvalidParameter { name: "ions", reason: "empty ion set".into() });
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Protocol {
    pub initial: StateVector,
    pub segments: Vec<Segment>,
    pub sample_every: f64,
    /// Integrator step for drive windows; `None` picks [`default_step`].
    pub dt: Option<f64>,
    /// rf field applied during waits with `dressing_on` (only Ω1 and the rf
    /// phase are used).
    pub dressing: DriveParams,
    pub keep_states: bool,
}

impl Protocol {
    pub fn new(initial: StateVector, segments: Vec<Segment>, sample_every: f64) -> Self {
        Self { initial, segments, sample_every, dt: None, dressing: DriveParams::off(), keep_states: false }
    }

    pub fn with_dressing(mut self, dressing: DriveParams) -> Self {
        self.dressing = dressing;
        self
    }

    pub fn with_dt(mut self, dt: Option<f64>) -> Self {
        self.dt = dt;
        self
    }

    pub fn total_duration(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| match s {
                Segment::Drive { duration, .. } | Segment::Wait { duration, .. } => *duration,
                Segment::Pulse { .. } => 0.0,
            })
            .sum()
    }

    fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::InvalidParameter { name: "segments", reason: "protocol has no segments".into() });
        }
        check_sampling(self.sample_every)?;
        self.dressing.validate()?;
        self.segments.iter().try_for_each(Segment::validate)
    }
}

/// Runs the protocol, calling `emit(t, state)` at every sample. Pulses and
/// segment boundaries re-emit at the same instant; consumers keep the last.
fn drive_protocol<F>(protocol: &Protocol, delta_b: Option<f64>, mut emit: F) -> Result<StateVector>
where
    F: FnMut(f64, &StateVector) -> Result<()>,
{
    protocol.validate()?;
    let space = protocol.initial.space();
    let mut state = protocol.initial.clone();
    let mut t0 = 0.0;
    emit(t0, &state)?;
    for seg in &protocol.segments {
        match seg {
            Segment::Drive { params, duration } => {
                let dt = protocol.dt.unwrap_or_else(|| default_step(params));
                state = integrate(&state, params, *duration, dt, protocol.sample_every, |t, s| emit(t0 + t, s))?;
                t0 += duration;
            }
            Segment::Wait { duration, dressing_on, noise_on } => {
                let mut h = Array2::<C64>::zeros((space.internal_dim(), space.internal_dim()));
                if *dressing_on {
                    h += &build_h1_internal(space.n_ions(), &protocol.dressing);
                }
                if let (true, Some(db)) = (*noise_on, delta_b) {
                    h += &build_noise_internal(space.n_ions(), db);
                }
                let n = step_count(*duration, protocol.sample_every);
                if n > 0 {
                    let step = duration / n as f64;
                    let idle = h.iter().all(|z| *z == C64::new(0.0, 0.0));
                    let u = if idle { None } else { Some(eigh(&h)?.propagator(step)) };
                    let mut amps = state.amplitudes().to_vec();
                    for k in 1..=n {
                        if let Some(u) = &u {
                            amps = apply_internal(space, &amps, u);
                        }
                        let t = if k == n { t0 + duration } else { t0 + k as f64 * step };
                        state = StateVector::from_evolved(space, Array1::from(amps.clone()));
                        emit(t, &state)?;
                    }
                }
                t0 += duration;
            }
            Segment::Pulse { pair, angle, phase, ions } => {
                state = ideal_pulse(&state, *pair, *angle, *phase, ions)?;
                emit(t0, &state)?;
            }
        }
    }
    Ok(state)
}

/// Executes the segments in order. `delta_b` (rad/s) is the Zeeman offset
/// seen by waits with `noise_on`.
pub fn run_protocol(protocol: &Protocol, delta_b: Option<f64>) -> Result<(StateVector, Trajectory)> {
    let mut traj = Trajectory { samples: Vec::new(), snapshots: protocol.keep_states.then(Vec::new) };
    let last = drive_protocol(protocol, delta_b, |t, s| {
        traj.push(t, s);
        Ok(())
    })?;
    Ok((last, traj))
}

/// Scalar evaluated on each sampled state.
#[derive(Clone, Debug)]
pub enum Observable {
    /// `⟨t|ρ_int|t⟩`
    Fidelity(InternalState),
    /// Population of one internal basis state.
    Population(Vec<Level>),
    MeanPhonon,
}

impl Observable {
    pub fn evaluate(&self, state: &StateVector) -> Result<f64> {
        match self {
            Observable::Fidelity(target) => state.internal_fidelity(target),
            Observable::Population(levels) => {
                let k = state.space().internal_index(levels)?;
                Ok(state.internal_populations()[k])
            }
            Observable::MeanPhonon => Ok(state.mean_phonon()),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct AveragedPoint {
    pub t: f64,
    pub mean: f64,
    /// Standard error of the mean over shots (zero for one shot).
    pub stderr: f64,
}

/// Deterministic RNG for shot `shot` of a run seeded with `seed`.
pub fn shot_rng(seed: u64, shot: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shot as u64);
    rng
}

/// Draws a Fock level from a thermal distribution with mean `mean`.
pub fn sample_thermal<R: Rng>(rng: &mut R, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let q = mean / (1.0 + mean);
    let u: f64 = rng.random();
    // P(n ≥ k) = q^k
    ((1.0 - u).ln() / q.ln()).floor() as usize
}

fn run_shot(protocol: &Protocol, noise: &NoiseParams, observable: &Observable, shot: usize) -> Result<Vec<(f64, f64)>> {
    let mut rng = shot_rng(noise.seed, shot);
    let delta_b = if noise.sigma_b > 0.0 {
        Normal::new(0.0, noise.sigma_b)
            .map_err(|e| Error::InvalidParameter { name: "sigma_b", reason: e.to_string() })?
            .sample(&mut rng)
    } else {
        0.0
    };
    let mut p = protocol.clone();
    if let Some(m) = noise.thermal_mean {
        p.initial = protocol.initial.shift_fock(sample_thermal(&mut rng, m))?;
    }
    let mut out: Vec<(f64, f64)> = Vec::new();
    drive_protocol(&p, Some(delta_b), |t, s| {
        let v = observable.evaluate(s)?;
        if out.last().is_some_and(|l| l.0 == t) {
            out.pop();
        }
        out.push((t, v));
        Ok(())
    })?;
    Ok(out)
}

/// Shot-averages `observable` over quasi-static Zeeman offsets
/// `δ_B ~ N(0, σ_B²)`. Shots run in parallel with per-shot RNG streams, so
/// the result does not depend on scheduling.
pub fn noise_average(protocol: &Protocol, noise: &NoiseParams, observable: &Observable) -> Result<Vec<AveragedPoint>> {
    noise.validate()?;
    let shots: Vec<Vec<(f64, f64)>> = (0..noise.n_samples)
        .into_par_iter()
        .map(|s| run_shot(protocol, noise, observable, s))
        .collect::<Result<_>>()?;
    let n = shots.len() as f64;
    let len = shots[0].len();
    let mut out = Vec::with_capacity(len);
    for k in 0..len {
        let t = shots[0][k].0;
        let mean = shots.iter().map(|s| s[k].1).sum::<f64>() / n;
        let stderr = if shots.len() > 1 {
            let var = shots.iter().map(|s| (s[k].1 - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        out.push(AveragedPoint { t, mean, stderr });
    }
    Ok(out)
}

/// Zeeman noise width giving a bare-qubit Gaussian 1/e coherence time `t`,
/// from `F(τ) = ½(1 + exp(−2σ²τ²))`.
pub fn sigma_for_coherence_time(t: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter { name: "t_bare", reason: format!("{t} must be > 0") });
    }
    Ok(1.0 / (std::f64::consts::SQRT_2 * t))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceStep {
    pub n_max: usize,
    pub next_n_max: usize,
    /// Largest absolute change of any tracked population between the two
    /// cutoffs, over all samples.
    pub max_change: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub steps: Vec<ConvergenceStep>,
    pub chosen: Option<usize>,
    pub tol: f64,
}

pub const CONVERGENCE_TOL: f64 = 1e-4;

/// Runs `build(space)` at each cutoff and compares successive runs. The
/// chosen cutoff is the smallest one whose change to the next is below
/// `tol`.
pub fn fock_convergence<F>(build: F, n_ions: usize, n_max_list: &[usize], tol: f64) -> Result<ConvergenceReport>
where
    F: Fn(SpaceConfig) -> Result<Protocol> + Sync,
{
    if n_max_list.len() < 2 || n_max_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter {
            name: "n_max_list",
            reason: "need at least two strictly increasing cutoffs".into(),
        });
    }
    let runs: Vec<Trajectory> = n_max_list
        .par_iter()
        .map(|&n| {
            let space = crate::hilbert::make_space(n_ions, n)?;
            run_protocol(&build(space)?, None).map(|(_, t)| t)
        })
        .collect::<Result<_>>()?;
    let mut steps = Vec::new();
    for (k, w) in runs.windows(2).enumerate() {
        if w[0].samples.len() != w[1].samples.len() {
            return Err(Error::DimensionMismatch { expected: w[0].samples.len(), got: w[1].samples.len() });
        }
        let max_change = w[0]
            .samples
            .iter()
            .zip(&w[1].samples)
            .map(|(a, b)| {
                let d = [a.p_aa - b.p_aa, a.p_dd - b.p_dd, a.p_uu - b.p_uu];
                let psi = if a.p_psi1.is_nan() { 0.0 } else { a.p_psi1 - b.p_psi1 };
                d.iter().fold(psi.abs(), |m, x| m.max(x.abs()))
            })
            .fold(0.0, f64::max);
        steps.push(ConvergenceStep { n_max: n_max_list[k], next_n_max: n_max_list[k + 1], max_change });
    }
    let chosen = steps.iter().find(|s| s.max_change < tol).map(|s| s.n_max);
    Ok(ConvergenceReport { steps, chosen, tol })
}
