//! Test-side reference constructions. Operators are assembled element by
//! element from the basis labels, without going through the library's
//! operator builders.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

pub const A: usize = 0;
pub const DOWN: usize = 1;
pub const UP: usize = 2;

/// Basis labels `(l1, l2, n)` of index `i` for two ions and cutoff `n_max`.
pub fn labels(i: usize, n_max: usize) -> (usize, usize, usize) {
    let f = n_max + 1;
    (i / (3 * f), (i / f) % 3, i % f)
}

pub fn index(l1: usize, l2: usize, n: usize, n_max: usize) -> usize {
    (l1 * 3 + l2) * (n_max + 1) + n
}

/// Row-wise sparse matrix.
#[derive(Clone)]
pub struct Sparse {
    pub rows: Vec<Vec<(usize, C64)>>,
}

impl Sparse {
    pub fn zeros(dim: usize) -> Self {
        Self { rows: vec![Vec::new(); dim] }
    }

    pub fn add(&mut self, r: usize, c: usize, v: C64) {
        if let Some(e) = self.rows[r].iter_mut().find(|e| e.0 == c) {
            e.1 += v;
        } else {
            self.rows[r].push((c, v));
        }
    }

    pub fn apply_into(&self, x: &[C64], scale: C64, out: &mut [C64]) {
        for (r, row) in self.rows.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for &(c, v) in row {
                acc += v * x[c];
            }
            out[r] += scale * acc;
        }
    }

    pub fn dagger(&self) -> Self {
        let mut d = Self::zeros(self.rows.len());
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                d.add(c, r, v.conj());
            }
        }
        d
    }

    pub fn dense(&self) -> DMatrix<C64> {
        let n = self.rows.len();
        let mut m = DMatrix::zeros(n, n);
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                m[(r, c)] += v;
            }
        }
        m
    }
}

/// Angular drive parameters (rad/s).
#[derive(Copy, Clone, Debug)]
pub struct Drive {
    pub omega1: f64,
    pub eta_omega2: f64,
    pub delta: f64,
    pub phase_rf: f64,
    pub phase_opt: f64,
}

impl Drive {
    pub fn hz(o1: f64, eo2: f64, d: f64) -> Self {
        let t = std::f64::consts::TAU;
        Self { omega1: t * o1, eta_omega2: t * eo2, delta: t * d, phase_rf: 0.0, phase_opt: 0.0 }
    }
}

/// Flip of either ion from `from` to `to`, other ion and motion untouched,
/// as `(row, column, coefficient)` triples.
fn single_ion_terms(n_max: usize, from: usize, to: usize, coeff: C64) -> Vec<(usize, usize, C64)> {
    let dim = 9 * (n_max + 1);
    let mut out = Vec::new();
    for i in 0..dim {
        let (l1, l2, n) = labels(i, n_max);
        if l1 == from {
            out.push((index(to, l2, n, n_max), i, coeff));
        }
        if l2 == from {
            out.push((index(l1, to, n, n_max), i, coeff));
        }
    }
    out
}

pub fn h1(n_max: usize, d: &Drive) -> Sparse {
    let mut m = Sparse::zeros(9 * (n_max + 1));
    let c = C64::from_polar(d.omega1 / 2.0, d.phase_rf);
    for (r, col, v) in single_ion_terms(n_max, DOWN, UP, c) {
        m.add(r, col, v);
    }
    for (r, col, v) in single_ion_terms(n_max, UP, DOWN, c.conj()) {
        m.add(r, col, v);
    }
    m
}

/// `(ηΩ2/2) S_φ a` with `S_φ = Σ_i (e^{iφ}|↓⟩⟨a| + h.c.)`.
pub fn sideband(n_max: usize, d: &Drive) -> Sparse {
    let dim = 9 * (n_max + 1);
    let c = C64::from_polar(1.0, d.phase_opt);
    // single-ion action of S_φ on a level
    let flip = |l: usize| -> Option<(usize, C64)> {
        match l {
            A => Some((DOWN, c)),
            DOWN => Some((A, c.conj())),
            _ => None,
        }
    };
    let mut b = Sparse::zeros(dim);
    for i in 0..dim {
        let (l1, l2, n) = labels(i, n_max);
        if n == 0 {
            continue;
        }
        let amp = (n as f64).sqrt() * d.eta_omega2 / 2.0;
        if let Some((m, v)) = flip(l1) {
            b.add(index(m, l2, n - 1, n_max), i, v * amp);
        }
        if let Some((m, v)) = flip(l2) {
            b.add(index(l1, m, n - 1, n_max), i, v * amp);
        }
    }
    b
}

pub fn number_diag(n_max: usize) -> Vec<f64> {
    (0..9 * (n_max + 1)).map(|i| labels(i, n_max).2 as f64).collect()
}

/// Exact solution via the frame rotating with `−δ a†a`, in which the
/// Hamiltonian is time independent:
/// `ψ(t) = exp(−iδ N t) exp(−i H' t) ψ0`, `H' = H1 + B + B† − δN`.
pub struct RotatingFrame {
    values: Vec<f64>,
    vectors: DMatrix<C64>,
    delta: f64,
    number: Vec<f64>,
}

impl RotatingFrame {
    pub fn new(n_max: usize, d: &Drive) -> Self {
        let b = sideband(n_max, d);
        let mut h = h1(n_max, d).dense() + b.dense() + b.dagger().dense();
        let number = number_diag(n_max);
        for (i, n) in number.iter().enumerate() {
            h[(i, i)] -= C64::new(d.delta * n, 0.0);
        }
        let eig = h.symmetric_eigen();
        Self { values: eig.eigenvalues.iter().cloned().collect(), vectors: eig.eigenvectors, delta: d.delta, number }
    }

    pub fn evolve(&self, psi0: &[C64], t: f64) -> Vec<C64> {
        let v0 = DVector::from_column_slice(psi0);
        let mut c = self.vectors.adjoint() * v0;
        for (k, lam) in self.values.iter().enumerate() {
            c[k] *= C64::from_polar(1.0, -lam * t);
        }
        let v = &self.vectors * c;
        v.iter().zip(&self.number).map(|(z, n)| z * C64::from_polar(1.0, -self.delta * n * t)).collect()
    }
}

/// Piecewise-constant propagation: on each step of length `h` the
/// Hamiltonian is frozen at the step midpoint and `exp(−iHh)` is applied
/// by its Taylor series, summed until the terms vanish.
pub fn piecewise_exponential(n_max: usize, d: &Drive, psi0: &[C64], duration: f64, h: f64) -> Vec<C64> {
    let hh1 = h1(n_max, d);
    let b = sideband(n_max, d);
    let bd = b.dagger();
    let dim = psi0.len();
    let steps = (duration / h).round() as usize;
    let h = duration / steps as f64;
    let mut psi = psi0.to_vec();
    let mut term = vec![C64::new(0.0, 0.0); dim];
    let mut next = vec![C64::new(0.0, 0.0); dim];
    for k in 0..steps {
        let tm = (k as f64 + 0.5) * h;
        let ph = C64::from_polar(1.0, d.delta * tm);
        term.copy_from_slice(&psi);
        for j in 1..40 {
            next.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            let s = C64::new(0.0, -h / j as f64);
            hh1.apply_into(&term, s, &mut next);
            b.apply_into(&term, s * ph, &mut next);
            bd.apply_into(&term, s * ph.conj(), &mut next);
            std::mem::swap(&mut term, &mut next);
            let mut mag = 0.0;
            for (p, t) in psi.iter_mut().zip(&term) {
                *p += t;
                mag += t.norm_sqr();
            }
            if mag < 1e-36 {
                break;
            }
        }
    }
    psi
}

pub fn overlap(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>().norm_sqr()
}

pub fn basis(n_max: usize, l1: usize, l2: usize, n: usize) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); 9 * (n_max + 1)];
    v[index(l1, l2, n, n_max)] = C64::new(1.0, 0.0);
    v
}
