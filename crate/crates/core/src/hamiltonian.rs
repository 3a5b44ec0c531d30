//! Drive and noise Hamiltonians in the rotating frame (ħ = 1, rad/s).
//!
//! * rf dressing: `H1 = (Ω1/2) Σ_i (e^{iφ_rf} σ⁺_{q,i} + h.c.)`
//! * bichromatic sideband drive:
//!   `H2(t) = (ηΩ2/2) Σ_i (a σ⁺_{o,i} e^{+iδt} + a† σ⁺_{o,i} e^{-iδt} + h.c.)`,
//!   with `σ⁺_o` carrying the optical phase `e^{iφ_opt}`
//! * quasi-static Zeeman noise: `(δ_B/2) Σ_i σ_{z,i}` on the qubit pair
//!
//! `H2(t)` is stored as `e^{iδt} B + e^{-iδt} B†` with
//! `B = (ηΩ2/2) S_φ a` and `S_φ = Σ_i (e^{iφ_opt} σ⁺_{o,i} + h.c.)`.

use std::f64::consts::TAU;

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{
    internal_index, kron_embed, ladder_ops, InternalState, Level, OperatorMatrix, Pair, SpaceConfig,
    LEVELS_PER_ION,
};
use crate::linalg::eigh;

/// Hz → rad/s. Every frequency entering from the outside passes through here.
pub fn angular(hz: f64) -> f64 {
    TAU * hz
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct DriveParams {
    /// rf Rabi angular frequency Ω1 (rad/s).
    pub omega1: f64,
    /// Sideband Rabi angular frequency ηΩ2 (rad/s).
    pub eta_omega2: f64,
    /// Sideband detuning δ (rad/s).
    pub delta: f64,
    pub phase_rf: f64,
    pub phase_opt: f64,
}

impl DriveParams {
    pub fn new(omega1: f64, eta_omega2: f64, delta: f64) -> Result<Self> {
        let p = Self { omega1, eta_omega2, delta, phase_rf: 0.0, phase_opt: 0.0 };
        p.validate()?;
        Ok(p)
    }

    /// Convenience constructor from ordinary frequencies in Hz.
    pub fn from_hz(omega1_hz: f64, eta_omega2_hz: f64, delta_hz: f64) -> Result<Self> {
        Self::new(angular(omega1_hz), angular(eta_omega2_hz), angular(delta_hz))
    }

    pub fn off() -> Self {
        Self { omega1: 0.0, eta_omega2: 0.0, delta: 0.0, phase_rf: 0.0, phase_opt: 0.0 }
    }

    pub fn with_phases(mut self, phase_rf: f64, phase_opt: f64) -> Self {
        self.phase_rf = phase_rf;
        self.phase_opt = phase_opt;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("omega1", self.omega1),
            ("eta_omega2", self.eta_omega2),
            ("delta", self.delta),
            ("phase_rf", self.phase_rf),
            ("phase_opt", self.phase_opt),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::InvalidParameter { name, reason: format!("{v} is not finite") });
            }
        }
        if self.omega1 < 0.0 {
            return Err(Error::InvalidParameter { name: "omega1", reason: "must be >= 0".into() });
        }
        if self.eta_omega2 < 0.0 {
            return Err(Error::InvalidParameter { name: "eta_omega2", reason: "must be >= 0".into() });
        }
        Ok(())
    }

    /// Largest of Ω1, ηΩ2, |δ| as an ordinary frequency (Hz).
    pub fn max_frequency_hz(&self) -> f64 {
        self.omega1.max(self.eta_omega2).max(self.delta.abs()) / TAU
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct NoiseParams {
    /// Standard deviation of the quasi-static Zeeman detuning (rad/s).
    pub sigma_b: f64,
    pub n_samples: usize,
    pub seed: u64,
    /// Mean phonon number of an optional thermal initial motional state.
    pub thermal_mean: Option<f64>,
}

impl NoiseParams {
    pub fn new(sigma_b: f64, n_samples: usize, seed: u64) -> Result<Self> {
        let p = Self { sigma_b, n_samples, seed, thermal_mean: None };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_b >= 0.0 && self.sigma_b.is_finite()) {
            return Err(Error::InvalidParameter { name: "sigma_b", reason: "must be finite and >= 0".into() });
        }
        if self.n_samples == 0 {
            return Err(Error::InvalidParameter { name: "n_samples", reason: "must be >= 1".into() });
        }
        if let Some(m) = self.thermal_mean {
            if !(m >= 0.0 && m.is_finite()) {
                return Err(Error::InvalidParameter { name: "thermal_mean", reason: "must be finite and >= 0".into() });
            }
        }
        Ok(())
    }
}

fn local_matrix(entries: &[(Level, Level, C64)]) -> Array2<C64> {
    let mut m = Array2::zeros((3, 3));
    for &(r, c, v) in entries {
        m[[r.index(), c.index()]] += v;
    }
    m
}

/// Σ_i m_i over ions, embedded with `fock_dim` trailing motional levels.
fn sum_over_ions(n_ions: usize, fock_dim: usize, m: &Array2<C64>) -> Array2<C64> {
    let dim = LEVELS_PER_ION.pow(n_ions as u32) * fock_dim;
    let mut out = Array2::zeros((dim, dim));
    for ion in 0..n_ions {
        let left = LEVELS_PER_ION.pow(ion as u32);
        let right = LEVELS_PER_ION.pow((n_ions - 1 - ion) as u32) * fock_dim;
        out += &kron_embed(left, m, right);
    }
    out
}

fn h1_local(params: &DriveParams) -> Array2<C64> {
    let c = C64::from_polar(params.omega1 / 2.0, params.phase_rf);
    local_matrix(&[
        (Pair::Qubit.upper(), Pair::Qubit.lower(), c),
        (Pair::Qubit.lower(), Pair::Qubit.upper(), c.conj()),
    ])
}

fn sz_local() -> Array2<C64> {
    local_matrix(&[(Level::Up, Level::Up, C64::new(1.0, 0.0)), (Level::Down, Level::Down, C64::new(-1.0, 0.0))])
}

/// `S_φ` restricted to one ion: e^{iφ}|↓⟩⟨a| + h.c.
fn optical_flip_local(phase: f64) -> Array2<C64> {
    let c = C64::from_polar(1.0, phase);
    local_matrix(&[
        (Pair::Optical.upper(), Pair::Optical.lower(), c),
        (Pair::Optical.lower(), Pair::Optical.upper(), c.conj()),
    ])
}

pub fn build_h1(space: SpaceConfig, params: &DriveParams) -> OperatorMatrix {
    let m = sum_over_ions(space.n_ions(), space.fock_dim(), &h1_local(params));
    OperatorMatrix::new(m, true).expect("H1 is hermitian by construction")
}

/// H1 on the internal levels only (no motional factor).
pub fn build_h1_internal(n_ions: usize, params: &DriveParams) -> Array2<C64> {
    sum_over_ions(n_ions, 1, &h1_local(params))
}

/// The operator `B = (ηΩ2/2) S_φ a`, so that `H2(t) = e^{iδt} B + e^{-iδt} B†`.
pub fn sideband_coupling(space: SpaceConfig, params: &DriveParams) -> OperatorMatrix {
    let s = sum_over_ions(space.n_ions(), space.fock_dim(), &optical_flip_local(params.phase_opt));
    let (a, _) = ladder_ops(space);
    let b = s.dot(a.entries()).mapv(|z| z * (params.eta_omega2 / 2.0));
    OperatorMatrix::new(b, false).expect("square")
}

pub fn build_h2_at(space: SpaceConfig, params: &DriveParams, t: f64) -> OperatorMatrix {
    let b = sideband_coupling(space, params);
    b.scale(C64::from_polar(1.0, params.delta * t)).plus_dagger()
}

pub fn build_noise(space: SpaceConfig, delta_b: f64) -> OperatorMatrix {
    let m = sum_over_ions(space.n_ions(), space.fock_dim(), &sz_local()).mapv(|z| z * (delta_b / 2.0));
    OperatorMatrix::new(m, true).expect("diagonal real")
}

pub fn build_noise_internal(n_ions: usize, delta_b: f64) -> Array2<C64> {
    sum_over_ions(n_ions, 1, &sz_local()).mapv(|z| z * (delta_b / 2.0))
}

/// Swap of the two ions' internal levels (identity on the motion).
pub fn exchange_op(space: SpaceConfig) -> Result<OperatorMatrix> {
    if space.n_ions() != 2 {
        return Err(Error::LabelCount { expected: 2, got: space.n_ions() });
    }
    let f = space.fock_dim();
    let mut m = Array2::zeros((space.dim(), space.dim()));
    for i in 0..3 {
        for j in 0..3 {
            for n in 0..f {
                m[[(j * 3 + i) * f + n, (i * 3 + j) * f + n]] = C64::new(1.0, 0.0);
            }
        }
    }
    OperatorMatrix::new(m, true)
}

/// Eigenstructure of H1 on the two-ion qubit subspace {↓,↑}⊗{↓,↑}.
#[derive(Clone, Debug)]
pub struct DressedBasis {
    /// Sorted descending.
    pub eigenvalues: [f64; 4],
    /// Internal two-ion states matching `eigenvalues`. The degenerate zero
    /// pair is returned as (exchange-symmetric, exchange-antisymmetric).
    pub eigenvectors: Vec<InternalState>,
}

const QUBIT_LEVELS: [Level; 2] = [Level::Down, Level::Up];

fn qubit_subspace_indices() -> [usize; 4] {
    let mut out = [0; 4];
    let mut k = 0;
    for l1 in QUBIT_LEVELS {
        for l2 in QUBIT_LEVELS {
            out[k] = internal_index(2, &[l1, l2]).unwrap();
            k += 1;
        }
    }
    out
}

/// Rotates the global phase so that the last component with non-negligible
/// magnitude is real and positive.
fn fix_phase(v: &mut Array1<C64>) {
    if let Some(c) = v.iter().rev().find(|z| z.norm() > 1e-6).copied() {
        let w = c.conj() / c.norm();
        v.mapv_inplace(|z| z * w);
    }
}

pub fn dressed_basis(params: &DriveParams) -> Result<DressedBasis> {
    params.validate()?;
    if params.omega1 <= 0.0 {
        return Err(Error::InvalidParameter { name: "omega1", reason: "dressed basis needs omega1 > 0".into() });
    }
    let idx = qubit_subspace_indices();
    let full = build_h1_internal(2, params);
    let h = Array2::from_shape_fn((4, 4), |(i, j)| full[[idx[i], idx[j]]]);
    let eig = eigh(&h)?;
    // ascending -> descending
    let values = [eig.values[3], eig.values[2], eig.values[1], eig.values[0]];
    let col = |k: usize| eig.vectors.column(k).to_owned();
    let top = col(3);
    let bottom = col(0);
    let (z1, z2) = (col(2), col(1));

    // exchange within the zero space: swap ↓↑ and ↑↓ (positions 1 and 2)
    let swap = |v: &Array1<C64>| {
        let mut w = v.clone();
        w.swap(1, 2);
        w
    };
    let dot = |a: &Array1<C64>, b: &Array1<C64>| a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>();
    let x = Array2::from_shape_vec(
        (2, 2),
        vec![dot(&z1, &swap(&z1)), dot(&z1, &swap(&z2)), dot(&z2, &swap(&z1)), dot(&z2, &swap(&z2))],
    )
    .expect("2x2");
    let xe = eigh(&x)?;
    // eigenvalue +1 (symmetric) is the last column after the ascending sort
    let combine = |k: usize| &z1 * xe.vectors[[0, k]] + &z2 * xe.vectors[[1, k]];
    let sym = combine(1);
    let anti = combine(0);

    let mut eigenvectors = Vec::with_capacity(4);
    for mut v in [top, sym, anti, bottom] {
        fix_phase(&mut v);
        let mut amps = Array1::zeros(9);
        for (k, &i) in idx.iter().enumerate() {
            amps[i] = v[k];
        }
        eigenvectors.push(InternalState::normalized(2, amps)?);
    }
    Ok(DressedBasis { eigenvalues: values, eigenvectors })
}
