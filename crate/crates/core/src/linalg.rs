//! Dense complex-Hermitian linear algebra for small matrices.
//!
//! Everything here works on `nalgebra` dynamic matrices and is intended for
//! dimensions up to roughly 16. The routines are pure functions.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;
pub type RMatrix = DMatrix<f64>;

/// Hermiticity violation above which inputs are rejected.
pub const HERMITIAN_REJECT_TOL: f64 = 1e-9;
/// Default relative rank threshold for pseudoinverses.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;
/// Negative eigenvalues down to `-NEGATIVE_CLAMP` (relative) are treated as roundoff.
pub const NEGATIVE_CLAMP: f64 = 1e-10;

const INDEFINITE_REL_TOL: f64 = 1e-8;

/// Spectral decomposition `M = U diag(p) U†` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: CMatrix,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Rebuilds `U f(diag(p)) U†`.
    pub fn map_eigenvalues(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let u = &self.eigenvectors;
        let d = CMatrix::from_diagonal(&self.eigenvalues.map(|p| Complex64::new(f(p), 0.0)));
        u * d * u.adjoint()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.map_eigenvalues(|p| p)
    }
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn ensure_square<T: nalgebra::Scalar>(m: &DMatrix<T>) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

pub fn ensure_dim<T: nalgebra::Scalar>(m: &DMatrix<T>, dim: usize) -> Result<()> {
    let n = ensure_square(m)?;
    if n != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: n,
        });
    }
    Ok(())
}

/// Largest entrywise `|m_ij - conj(m_ji)|`.
pub fn max_asymmetry(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn max_asymmetry_real(m: &RMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// `½(M + M†)`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted ascending.
pub fn eig_hermitian(m: &CMatrix) -> Result<EigenDecomposition> {
    ensure_square(m)?;
    let asym = max_asymmetry(m);
    if asym > HERMITIAN_REJECT_TOL {
        return Err(Error::NonHermitianInput(asym));
    }
    let eig = SymmetricEigen::new(hermitian_part(m));
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut eigenvectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

fn sorted_symmetric_eigen(s: &RMatrix) -> (Vec<f64>, RMatrix) {
    let sym = (s + s.transpose()).scale(0.5);
    let eig = SymmetricEigen::new(sym);
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// Moore-Penrose pseudoinverse of a real symmetric PSD matrix.
///
/// Eigenvalues `s_i > rank_tol * max(s)` are inverted; the rest are mapped to zero.
pub fn pinv_psd(s: &RMatrix, rank_tol: f64) -> Result<RMatrix> {
    let n = ensure_square(s)?;
    if n == 0 {
        return Ok(RMatrix::zeros(0, 0));
    }
    let scale = s.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let asym = max_asymmetry_real(s);
    if asym > HERMITIAN_REJECT_TOL * scale.max(1.0) {
        return Err(Error::NonHermitianInput(asym));
    }
    let (values, vectors) = sorted_symmetric_eigen(s);
    let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -INDEFINITE_REL_TOL * max_abs {
        return Err(Error::IndefiniteInput(min));
    }
    let max = values.iter().copied().fold(0.0f64, f64::max);
    let cutoff = rank_tol * max;
    let mut out = RMatrix::zeros(n, n);
    for (k, &v) in values.iter().enumerate() {
        if v > cutoff && v > 0.0 {
            let col = vectors.column(k);
            out += (col * col.transpose()).scale(1.0 / v);
        }
    }
    Ok((&out + out.transpose()).scale(0.5))
}

/// Principal square root of a Hermitian PSD matrix.
pub fn matrix_sqrt_psd(m: &CMatrix) -> Result<CMatrix> {
    let eig = eig_hermitian(m)?;
    let scale = eig.eigenvalues.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -NEGATIVE_CLAMP * scale {
        return Err(Error::IndefiniteInput(min));
    }
    Ok(hermitian_part(&eig.map_eigenvalues(|p| p.max(0.0).sqrt())))
}

/// Pauli matrices and related 2x2 operators in the ordered basis `{|0>, |1>}`.
pub mod pauli {
    use super::{c, CMatrix};

    pub fn identity() -> CMatrix {
        CMatrix::identity(2, 2)
    }

    pub fn x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
    }

    pub fn y() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
    }

    pub fn z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
    }

    /// `|0><1|`, the lowering operator of a two-level ladder.
    pub fn lowering() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)])
    }

    /// `|1><1|`.
    pub fn number() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., 0.), c(0., 0.), c(1., 0.)])
    }
}
