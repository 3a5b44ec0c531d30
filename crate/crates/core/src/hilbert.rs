//! Composite Hilbert space of `n_ions` three-level ions sharing one motional
//! mode truncated at `n_max` phonons.
//!
//! Basis ordering is fixed: ion 1 level ⊗ ion 2 level ⊗ … ⊗ Fock, with the
//! per-ion level order (a, down, up) and Fock order 0..=n_max. The flat index
//! of `|l_1, …, l_N, n⟩` is therefore
//!
//! ```text
//! index = (Σ_k l_k · 3^(N-1-k)) · (n_max + 1) + n
//! ```
//!
//! All amplitudes use ħ = 1; operators carry energies in rad/s.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Normalization tolerance enforced when a state is constructed.
pub const NORM_TOL: f64 = 1e-8;
/// Hermiticity tolerance for matrices flagged hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

pub const LEVELS_PER_ION: usize = 3;

/// Internal level of a single ion.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    /// Ancillary metastable level.
    A,
    Down,
    Up,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::A, Level::Down, Level::Up];

    pub fn index(self) -> usize {
        match self {
            Level::A => 0,
            Level::Down => 1,
            Level::Up => 2,
        }
    }

    pub fn from_index(k: usize) -> Option<Level> {
        Level::ALL.get(k).copied()
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::A => "a",
            Level::Down => "down",
            Level::Up => "up",
        })
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a" => Ok(Level::A),
            "down" | "d" | "dn" => Ok(Level::Down),
            "up" | "u" => Ok(Level::Up),
            other => Err(Error::UnknownLevel(other.to_string())),
        }
    }
}

/// Two-level transition inside the three-level ion.
///
/// The raising operator of a pair is `|upper⟩⟨lower|`. For the optical pair
/// the ancilla `|a⟩` is taken as the lower state; this orientation is a
/// convention and has no effect on rotating-frame dynamics.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Pair {
    /// rf qubit, down ↔ up.
    Qubit,
    /// Optical quadrupole transition, a ↔ down.
    Optical,
    /// Direct a ↔ up rotation (idealized; physically a composite of two pulses).
    Composite,
}

impl Pair {
    pub fn upper(self) -> Level {
        match self {
            Pair::Qubit => Level::Up,
            Pair::Optical => Level::Down,
            Pair::Composite => Level::Up,
        }
    }

    pub fn lower(self) -> Level {
        match self {
            Pair::Qubit => Level::Down,
            Pair::Optical => Level::A,
            Pair::Composite => Level::A,
        }
    }

    /// The level not addressed by this pair.
    pub fn spectator(self) -> Level {
        match self {
            Pair::Qubit => Level::A,
            Pair::Optical => Level::Up,
            Pair::Composite => Level::Down,
        }
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pair::Qubit => "qubit",
            Pair::Optical => "optical",
            Pair::Composite => "composite",
        })
    }
}

impl FromStr for Pair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "qubit" | "rf" => Ok(Pair::Qubit),
            "optical" => Ok(Pair::Optical),
            "composite" | "a_up" => Ok(Pair::Composite),
            other => Err(Error::UnknownPair(other.to_string())),
        }
    }
}

/// Dimensions of the composite space.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpaceConfig {
    n_ions: usize,
    n_max: usize,
}

pub fn make_space(n_ions: usize, n_max: usize) -> Result<SpaceConfig> {
    if n_ions == 0 {
        return Err(Error::InvalidSpace("n_ions must be at least 1".into()));
    }
    if n_max == 0 {
        return Err(Error::InvalidSpace("n_max must be at least 1".into()));
    }
    if n_ions > 8 {
        return Err(Error::InvalidSpace(format!("n_ions = {n_ions} is too large for dense storage")));
    }
    Ok(SpaceConfig { n_ions, n_max })
}

impl SpaceConfig {
    pub fn n_ions(&self) -> usize {
        self.n_ions
    }

    pub fn n_levels(&self) -> usize {
        LEVELS_PER_ION
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn fock_dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn internal_dim(&self) -> usize {
        LEVELS_PER_ION.pow(self.n_ions as u32)
    }

    pub fn dim(&self) -> usize {
        self.internal_dim() * self.fock_dim()
    }

    pub fn internal_index(&self, levels: &[Level]) -> Result<usize> {
        internal_index(self.n_ions, levels)
    }

    pub fn index(&self, levels: &[Level], n: usize) -> Result<usize> {
        if n > self.n_max {
            return Err(Error::FockOutOfRange { index: n, n_max: self.n_max });
        }
        Ok(self.internal_index(levels)? * self.fock_dim() + n)
    }

    /// Inverse of [`SpaceConfig::index`].
    pub fn decompose(&self, index: usize) -> (Vec<Level>, usize) {
        let n = index % self.fock_dim();
        (internal_levels(self.n_ions, index / self.fock_dim()), n)
    }
}

pub(crate) fn internal_index(n_ions: usize, levels: &[Level]) -> Result<usize> {
    if levels.len() != n_ions {
        return Err(Error::LabelCount { expected: n_ions, got: levels.len() });
    }
    Ok(levels.iter().fold(0, |acc, l| acc * LEVELS_PER_ION + l.index()))
}

pub(crate) fn internal_levels(n_ions: usize, mut internal: usize) -> Vec<Level> {
    let mut out = vec![Level::A; n_ions];
    for slot in out.iter_mut().rev() {
        *slot = Level::from_index(internal % LEVELS_PER_ION).unwrap();
        internal /= LEVELS_PER_ION;
    }
    out
}

fn vec_norm(v: &Array1<C64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn vdot(a: &Array1<C64>, b: &Array1<C64>) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Normalized pure state on the composite space.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: Array1<C64>,
    space: SpaceConfig,
}

impl StateVector {
    pub fn new(space: SpaceConfig, amplitudes: Array1<C64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), got: amplitudes.len() });
        }
        let norm = vec_norm(&amplitudes);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { amplitudes, space })
    }

    /// Normalizes `amplitudes`; fails only on a zero vector or wrong length.
    pub fn normalized(space: SpaceConfig, amplitudes: Array1<C64>) -> Result<Self> {
        let norm = vec_norm(&amplitudes);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized(norm));
        }
        Self::new(space, amplitudes.mapv(|z| z / norm))
    }

    /// Skips the normalization check; used by integrators that monitor
    /// drift themselves.
    pub(crate) fn from_evolved(space: SpaceConfig, amplitudes: Array1<C64>) -> Self {
        debug_assert_eq!(amplitudes.len(), space.dim());
        Self { amplitudes, space }
    }

    /// `|internal⟩ ⊗ |n⟩`.
    pub fn from_internal(space: SpaceConfig, internal: &InternalState, n: usize) -> Result<Self> {
        if internal.n_ions() != space.n_ions() {
            return Err(Error::LabelCount { expected: space.n_ions(), got: internal.n_ions() });
        }
        if n > space.n_max() {
            return Err(Error::FockOutOfRange { index: n, n_max: space.n_max() });
        }
        let mut amps = Array1::zeros(space.dim());
        for (k, c) in internal.amplitudes().iter().enumerate() {
            amps[k * space.fock_dim() + n] = *c;
        }
        Ok(Self { amplitudes: amps, space })
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Array1<C64> {
        self.amplitudes
    }

    pub fn space(&self) -> SpaceConfig {
        self.space
    }

    pub fn norm(&self) -> f64 {
        vec_norm(&self.amplitudes)
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.space != other.space {
            return Err(Error::DimensionMismatch { expected: self.space.dim(), got: other.space.dim() });
        }
        Ok(vdot(&self.amplitudes, &other.amplitudes))
    }

    pub fn overlap(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    pub fn scaled_phase(&self, phase: f64) -> StateVector {
        let w = C64::from_polar(1.0, phase);
        Self { amplitudes: self.amplitudes.mapv(|z| z * w), space: self.space }
    }

    /// Moves every amplitude from Fock level `n` to `n + k`. Fails if any
    /// population would be pushed past the cutoff.
    pub fn shift_fock(&self, k: usize) -> Result<StateVector> {
        if k == 0 {
            return Ok(self.clone());
        }
        let f = self.space.fock_dim();
        let mut amps = Array1::zeros(self.space.dim());
        for (idx, c) in self.amplitudes.iter().enumerate() {
            if c.norm_sqr() == 0.0 {
                continue;
            }
            let n = idx % f;
            if n + k > self.space.n_max() {
                return Err(Error::FockOutOfRange { index: n + k, n_max: self.space.n_max() });
            }
            amps[idx + k] = *c;
        }
        Ok(Self { amplitudes: amps, space: self.space })
    }

    /// Reduced density matrix of the internal levels (motion traced out).
    pub fn reduced_internal(&self) -> Array2<C64> {
        let d = self.space.internal_dim();
        let f = self.space.fock_dim();
        let mut rho = Array2::zeros((d, d));
        for i in 0..d {
            for j in i..d {
                let mut acc = C64::new(0.0, 0.0);
                for n in 0..f {
                    acc += self.amplitudes[i * f + n] * self.amplitudes[j * f + n].conj();
                }
                rho[[i, j]] = acc;
                rho[[j, i]] = acc.conj();
            }
        }
        rho
    }

    /// Populations of the internal basis states, summed over Fock levels.
    pub fn internal_populations(&self) -> Vec<f64> {
        let f = self.space.fock_dim();
        self.amplitudes
            .as_slice()
            .expect("contiguous")
            .chunks(f)
            .map(|block| block.iter().map(|z| z.norm_sqr()).sum())
            .collect()
    }

    /// `⟨t| ρ_int |t⟩` for an internal target state, motion traced out.
    pub fn internal_fidelity(&self, target: &InternalState) -> Result<f64> {
        if target.n_ions() != self.space.n_ions() {
            return Err(Error::LabelCount { expected: self.space.n_ions(), got: target.n_ions() });
        }
        let f = self.space.fock_dim();
        let mut total = 0.0;
        for n in 0..f {
            let mut acc = C64::new(0.0, 0.0);
            for (i, t) in target.amplitudes().iter().enumerate() {
                acc += t.conj() * self.amplitudes[i * f + n];
            }
            total += acc.norm_sqr();
        }
        Ok(total)
    }

    /// ⟨a†a⟩
    pub fn mean_phonon(&self) -> f64 {
        let f = self.space.fock_dim();
        self.amplitudes.iter().enumerate().map(|(k, z)| (k % f) as f64 * z.norm_sqr()).sum()
    }
}

/// Normalized state of the internal levels only (no motional factor).
#[derive(Clone, Debug, PartialEq)]
pub struct InternalState {
    amplitudes: Array1<C64>,
    n_ions: usize,
}

impl InternalState {
    pub fn new(n_ions: usize, amplitudes: Array1<C64>) -> Result<Self> {
        let dim = LEVELS_PER_ION.pow(n_ions as u32);
        if amplitudes.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: amplitudes.len() });
        }
        let norm = vec_norm(&amplitudes);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { amplitudes, n_ions })
    }

    pub fn normalized(n_ions: usize, amplitudes: Array1<C64>) -> Result<Self> {
        let norm = vec_norm(&amplitudes);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized(norm));
        }
        Self::new(n_ions, amplitudes.mapv(|z| z / norm))
    }

    pub fn basis(levels: &[Level]) -> Self {
        let n_ions = levels.len();
        let mut amps = Array1::zeros(LEVELS_PER_ION.pow(n_ions as u32));
        amps[internal_index(n_ions, levels).unwrap()] = C64::new(1.0, 0.0);
        Self { amplitudes: amps, n_ions }
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amplitudes
    }

    pub fn n_ions(&self) -> usize {
        self.n_ions
    }

    pub fn inner(&self, other: &InternalState) -> C64 {
        vdot(&self.amplitudes, &other.amplitudes)
    }

    pub fn amplitude(&self, levels: &[Level]) -> C64 {
        internal_index(self.n_ions, levels).map(|k| self.amplitudes[k]).unwrap_or_default()
    }
}

/// Two-ion states with conventional names.
#[derive(Copy, Clone, Debug, PartialEq)]
pub enum NamedState {
    /// (|↑↑⟩ − |↓↓⟩)/√2, the exchange-symmetric dark state.
    Psi1,
    /// (|↑↓⟩ − |↓↑⟩)/√2, the singlet dark state.
    Psi2,
    PlusPlus,
    MinusMinus,
    /// (|aa⟩ + |↓↓⟩)/√2
    BellAaDd,
    /// (e^{iθ}|aa⟩ + |↓↓⟩ − |↑↑⟩)/√3
    QutritGhz(f64),
}

impl FromStr for NamedState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        match t.as_str() {
            "psi1" => return Ok(NamedState::Psi1),
            "psi2" => return Ok(NamedState::Psi2),
            "plusplus" => return Ok(NamedState::PlusPlus),
            "minusminus" => return Ok(NamedState::MinusMinus),
            "bell_aa_dd" => return Ok(NamedState::BellAaDd),
            "qutrit_ghz" => return Ok(NamedState::QutritGhz(0.0)),
            _ => {}
        }
        if let Some(arg) = t.strip_prefix("qutrit_ghz(").and_then(|r| r.strip_suffix(')')) {
            if let Ok(theta) = arg.trim().parse::<f64>() {
                if theta.is_finite() {
                    return Ok(NamedState::QutritGhz(theta));
                }
            }
        }
        Err(Error::UnknownState(s.to_string()))
    }
}

/// Internal two-ion amplitudes of a named state.
pub fn named_internal(name: NamedState) -> InternalState {
    use Level::*;
    let mut amps = Array1::<C64>::zeros(9);
    let mut set = |l1: Level, l2: Level, c: C64| {
        amps[l1.index() * 3 + l2.index()] += c;
    };
    let r = |x: f64| C64::new(x, 0.0);
    match name {
        NamedState::Psi1 => {
            set(Up, Up, r(FRAC_1_SQRT_2));
            set(Down, Down, r(-FRAC_1_SQRT_2));
        }
        NamedState::Psi2 => {
            set(Up, Down, r(FRAC_1_SQRT_2));
            set(Down, Up, r(-FRAC_1_SQRT_2));
        }
        NamedState::PlusPlus | NamedState::MinusMinus => {
            // |±⟩ = (|↑⟩ ± |↓⟩)/√2
            let s = if name == NamedState::PlusPlus { 1.0 } else { -1.0 };
            set(Up, Up, r(0.5));
            set(Up, Down, r(0.5 * s));
            set(Down, Up, r(0.5 * s));
            set(Down, Down, r(0.5));
        }
        NamedState::BellAaDd => {
            set(A, A, r(FRAC_1_SQRT_2));
            set(Down, Down, r(FRAC_1_SQRT_2));
        }
        NamedState::QutritGhz(theta) => {
            let k = 1.0 / 3f64.sqrt();
            set(A, A, C64::from_polar(k, theta));
            set(Down, Down, r(k));
            set(Up, Up, r(-k));
        }
    }
    InternalState { amplitudes: amps, n_ions: 2 }
}

pub fn basis_state(space: SpaceConfig, levels: &[Level], n: usize) -> Result<StateVector> {
    let idx = space.index(levels, n)?;
    let mut amps = Array1::zeros(space.dim());
    amps[idx] = C64::new(1.0, 0.0);
    StateVector::new(space, amps)
}

pub fn named_state(space: SpaceConfig, name: NamedState, n: usize) -> Result<StateVector> {
    if space.n_ions() != 2 {
        return Err(Error::LabelCount { expected: 2, got: space.n_ions() });
    }
    StateVector::from_internal(space, &named_internal(name), n)
}

/// Dense complex operator on the composite space.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    entries: Array2<C64>,
    hermitian: bool,
}

impl OperatorMatrix {
    pub fn new(entries: Array2<C64>, hermitian: bool) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::DimensionMismatch { expected: entries.nrows(), got: entries.ncols() });
        }
        let op = Self { entries, hermitian: false };
        if hermitian {
            let dev = op.hermiticity_error();
            if dev >= HERMITIAN_TOL {
                return Err(Error::NotHermitian(dev));
            }
        }
        Ok(Self { hermitian, ..op })
    }

    pub fn identity(dim: usize) -> Self {
        Self { entries: Array2::eye(dim), hermitian: true }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { entries: Array2::zeros((dim, dim)), hermitian: true }
    }

    pub fn entries(&self) -> &Array2<C64> {
        &self.entries
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// max |M − M†|
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut dev = 0.0f64;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.entries[[i, j]] - self.entries[[j, i]].conj()).norm());
            }
        }
        dev
    }

    pub fn dagger(&self) -> Self {
        Self { entries: self.entries.t().mapv(|z| z.conj()), hermitian: self.hermitian }
    }

    pub fn dot(&self, other: &OperatorMatrix) -> Self {
        Self { entries: self.entries.dot(&other.entries), hermitian: false }
    }

    pub fn add(&self, other: &OperatorMatrix) -> Self {
        Self { entries: &self.entries + &other.entries, hermitian: self.hermitian && other.hermitian }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { entries: self.entries.mapv(|z| z * c), hermitian: self.hermitian && c.im == 0.0 }
    }

    /// Sum of this operator and its adjoint; always hermitian.
    pub fn plus_dagger(&self) -> Self {
        let e = &self.entries + &self.entries.t().mapv(|z| z.conj());
        Self { entries: e, hermitian: true }
    }

    pub fn apply(&self, v: &Array1<C64>) -> Array1<C64> {
        self.entries.dot(v)
    }

    /// max |[A, B]| entry
    pub fn commutator_norm(&self, other: &OperatorMatrix) -> f64 {
        let c = self.entries.dot(&other.entries) - other.entries.dot(&self.entries);
        c.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// `I_left ⊗ m ⊗ I_right` for square matrices.
pub(crate) fn kron_embed(left: usize, m: &Array2<C64>, right: usize) -> Array2<C64> {
    let k = m.nrows();
    let dim = left * k * right;
    let mut out = Array2::zeros((dim, dim));
    for l in 0..left {
        for i in 0..k {
            for j in 0..k {
                let v = m[[i, j]];
                if v == C64::new(0.0, 0.0) {
                    continue;
                }
                for r in 0..right {
                    out[[(l * k + i) * right + r, (l * k + j) * right + r]] = v;
                }
            }
        }
    }
    out
}

/// Embeds a single-ion 3×3 matrix acting on `ion`.
pub(crate) fn embed_local(space: SpaceConfig, ion: usize, m: &Array2<C64>) -> Array2<C64> {
    let left = LEVELS_PER_ION.pow(ion as u32);
    let right = LEVELS_PER_ION.pow((space.n_ions() - 1 - ion) as u32) * space.fock_dim();
    kron_embed(left, m, right)
}

fn level_outer(upper: Level, lower: Level) -> Array2<C64> {
    let mut m = Array2::zeros((3, 3));
    m[[upper.index(), lower.index()]] = C64::new(1.0, 0.0);
    m
}

/// Raising operator `|upper⟩⟨lower|` of `pair` on `ion`.
pub fn transition_op(space: SpaceConfig, pair: Pair, ion: usize) -> Result<OperatorMatrix> {
    if ion >= space.n_ions() {
        return Err(Error::IonOutOfRange { index: ion, n_ions: space.n_ions() });
    }
    let m = level_outer(pair.upper(), pair.lower());
    Ok(OperatorMatrix { entries: embed_local(space, ion, &m), hermitian: false })
}

/// Single-ion level projector `|l⟩⟨l|` on `ion`.
pub fn level_projector(space: SpaceConfig, level: Level, ion: usize) -> Result<OperatorMatrix> {
    if ion >= space.n_ions() {
        return Err(Error::IonOutOfRange { index: ion, n_ions: space.n_ions() });
    }
    let m = level_outer(level, level);
    Ok(OperatorMatrix { entries: embed_local(space, ion, &m), hermitian: true })
}

/// Truncated annihilation and creation operators of the shared mode.
/// `a†|n_max⟩ = 0`.
pub fn ladder_ops(space: SpaceConfig) -> (OperatorMatrix, OperatorMatrix) {
    let f = space.fock_dim();
    let mut a = Array2::<C64>::zeros((f, f));
    for n in 1..f {
        a[[n - 1, n]] = C64::new((n as f64).sqrt(), 0.0);
    }
    let full = kron_embed(space.internal_dim(), &a, 1);
    let ann = OperatorMatrix { entries: full, hermitian: false };
    let cre = ann.dagger();
    (ann, cre)
}

pub fn number_op(space: SpaceConfig) -> OperatorMatrix {
    let f = space.fock_dim();
    let diag = Array1::from_iter((0..space.dim()).map(|k| C64::new((k % f) as f64, 0.0)));
    OperatorMatrix { entries: Array2::from_diag(&diag), hermitian: true }
}

/// Set of basis states selected by per-ion level sets and an optional Fock set.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelPattern {
    pub levels: Vec<Vec<Level>>,
    pub fock: Option<Vec<usize>>,
}

impl LevelPattern {
    /// Exactly one level per ion, any Fock number.
    pub fn exact(levels: &[Level]) -> Self {
        Self { levels: levels.iter().map(|l| vec![*l]).collect(), fock: None }
    }

    pub fn matches(&self, levels: &[Level], n: usize) -> bool {
        self.levels.iter().zip(levels).all(|(set, l)| set.contains(l))
            && self.fock.as_ref().map_or(true, |fs| fs.contains(&n))
    }
}

pub fn projector(space: SpaceConfig, pattern: &LevelPattern) -> Result<OperatorMatrix> {
    if pattern.levels.len() != space.n_ions() {
        return Err(Error::LabelCount { expected: space.n_ions(), got: pattern.levels.len() });
    }
    if pattern.levels.iter().any(|s| s.is_empty()) || pattern.fock.as_ref().is_some_and(|f| f.is_empty()) {
        return Err(Error::EmptyPattern);
    }
    if let Some(&bad) = pattern.fock.as_ref().and_then(|f| f.iter().find(|&&n| n > space.n_max())) {
        return Err(Error::FockOutOfRange { index: bad, n_max: space.n_max() });
    }
    let mut m = Array2::zeros((space.dim(), space.dim()));
    for k in 0..space.dim() {
        let (levels, n) = space.decompose(k);
        if pattern.matches(&levels, n) {
            m[[k, k]] = C64::new(1.0, 0.0);
        }
    }
    Ok(OperatorMatrix { entries: m, hermitian: true })
}

/// ⟨ψ|M|ψ⟩
pub fn expectation(state: &StateVector, op: &OperatorMatrix) -> Result<C64> {
    if op.dim() != state.space().dim() {
        return Err(Error::DimensionMismatch { expected: state.space().dim(), got: op.dim() });
    }
    let v = state.amplitudes();
    let e = vdot(v, &op.apply(v));
    if op.is_hermitian() {
        Ok(C64::new(e.re, 0.0))
    } else {
        Ok(e)
    }
}
