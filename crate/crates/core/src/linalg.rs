//! Small numerical helpers: hermitian eigendecomposition (backed by
//! nalgebra) and a compressed-row operator for the integrator's hot loop.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Eigendecomposition of a hermitian matrix: `M = V diag(λ) V†`, with
/// eigenvalues in ascending order and eigenvectors as the columns of `V`.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: Array2<C64>,
}

pub fn eigh(m: &Array2<C64>) -> Result<HermitianEigen> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::DimensionMismatch { expected: n, got: m.ncols() });
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Eigen("non-finite matrix entry".into()));
    }
    let dm = DMatrix::from_fn(n, n, |i, j| m[[i, j]]);
    let eig = SymmetricEigen::new(dm);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = Array2::zeros((n, n));
    for (col, &k) in order.iter().enumerate() {
        for row in 0..n {
            vectors[[row, col]] = eig.eigenvectors[(row, k)];
        }
    }
    Ok(HermitianEigen { values, vectors })
}

impl HermitianEigen {
    /// `exp(-i M t)`
    pub fn propagator(&self, t: f64) -> Array2<C64> {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (col, &lam) in self.values.iter().enumerate() {
            let ph = C64::from_polar(1.0, -lam * t);
            for row in 0..n {
                scaled[[row, col]] *= ph;
            }
        }
        scaled.dot(&self.vectors.t().mapv(|z| z.conj()))
    }
}

/// Compressed sparse row matrix; only used for fast matrix-vector products.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl CsrMatrix {
    pub fn from_dense(m: &Array2<C64>) -> Self {
        let mut row_ptr = Vec::with_capacity(m.nrows() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in m.rows() {
            for (j, v) in row.iter().enumerate() {
                if *v != C64::new(0.0, 0.0) {
                    cols.push(j);
                    vals.push(*v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { row_ptr, cols, vals }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `out += scale · M x`
    pub fn mul_add(&self, x: &[C64], scale: C64, out: &mut [C64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *o += scale * acc;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array1;

    #[test]
    fn eigh_reconstructs_pauli_x() {
        let mut m = Array2::<C64>::zeros((2, 2));
        m[[0, 1]] = C64::new(1.0, 0.0);
        m[[1, 0]] = C64::new(1.0, 0.0);
        let e = eigh(&m).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
        let u = e.propagator(std::f64::consts::PI);
        // exp(-iπσx) = -I
        assert!((u[[0, 0]] + C64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(u[[0, 1]].norm() < 1e-12);
    }

    #[test]
    fn csr_matches_dense() {
        let m = Array2::from_shape_fn((4, 4), |(i, j)| {
            if (i + j) % 3 == 0 {
                C64::new(i as f64, j as f64)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let x = Array1::from_shape_fn(4, |k| C64::new(1.0 + k as f64, -0.5));
        let mut out = vec![C64::new(0.0, 0.0); 4];
        CsrMatrix::from_dense(&m).mul_add(x.as_slice().unwrap(), C64::new(1.0, 0.0), &mut out);
        let want = m.dot(&x);
        for k in 0..4 {
            assert!((out[k] - want[k]).norm() < 1e-14);
        }
    }
}
