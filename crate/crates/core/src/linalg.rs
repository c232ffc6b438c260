//! Dense symmetric helpers shared by training and inference.
//!
//! Everything here works on `nalgebra` dynamic matrices. Eigendecompositions
//! always go through the symmetric solver; callers never see unsorted spectra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative threshold under which an eigenvalue of Gamma counts as zero.
pub const GAMMA_SINGULAR_RTOL: f64 = 1e-12;

/// Returns `(m + mᵀ) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Symmetric eigendecomposition with eigenvalues in descending order.
///
/// The input is symmetrized first. Column `k` of the returned matrix is the
/// eigenvector for the `k`-th largest eigenvalue.
pub fn sym_eigen_desc(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    assert!(m.is_square(), "symmetric eigendecomposition needs a square matrix");
    let eig = symmetrize(m).symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Flips every column so that its largest-magnitude entry is positive.
///
/// Ties go to the earliest row. Returns the per-column sign that was applied.
pub fn apply_sign_convention(m: &mut DMatrix<f64>) -> Vec<f64> {
    let mut signs = Vec::with_capacity(m.ncols());
    for mut col in m.column_iter_mut() {
        let mut best = 0usize;
        let mut best_abs = f64::NEG_INFINITY;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > best_abs {
                best_abs = v.abs();
                best = i;
            }
        }
        let sign = if col.len() > 0 && col[best] < 0.0 { -1.0 } else { 1.0 };
        if sign < 0.0 {
            col.neg_mut();
        }
        signs.push(sign);
    }
    signs
}

/// Flips the columns of `candidate` so each one is as close as possible (in
/// L2) to the matching column of `reference`.
pub fn align_signs(reference: &DMatrix<f64>, candidate: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(reference.shape(), candidate.shape(), "sign alignment needs equal shapes");
    let mut out = candidate.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        if reference.column(j).dot(&col) < 0.0 {
            col.neg_mut();
        }
    }
    out
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape(), "max_abs_diff needs equal shapes");
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Frobenius norm of the off-diagonal part of a square matrix.
pub fn offdiag_frobenius(m: &DMatrix<f64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if i != j {
                acc += m[(i, j)] * m[(i, j)];
            }
        }
    }
    acc.sqrt()
}

/// `‖AᵀA − I‖_F`.
pub fn orthonormality_defect(a: &DMatrix<f64>) -> f64 {
    let gram = a.transpose() * a;
    (gram - DMatrix::identity(a.ncols(), a.ncols())).norm()
}

/// Thin QR orthonormalization with the R diagonal forced positive, so the
/// result stays close to an input that is already nearly orthonormal.
pub fn orthonormalize(a: &DMatrix<f64>) -> DMatrix<f64> {
    let qr = a.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..q.ncols() {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Eigendecomposition of a symmetric positive definite matrix, kept around
/// so square roots, inverse square roots and solves share one factorization.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    values: DVector<f64>,
    vectors: DMatrix<f64>,
}

impl SpdFactor {
    /// Fails with [`Error::SingularGamma`] when the smallest eigenvalue is
    /// below `1e-12 ×` the largest (or not positive at all).
    pub fn new(m: &DMatrix<f64>) -> Result<Self> {
        let (values, vectors) = sym_eigen_desc(m);
        let max_eig = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min_eig = values.iter().copied().fold(f64::INFINITY, f64::min);
        if !(max_eig > 0.0) || min_eig < GAMMA_SINGULAR_RTOL * max_eig {
            return Err(Error::SingularGamma { min_eig, max_eig });
        }
        Ok(Self { values, vectors })
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.values
    }

    fn apply(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let scaled = DMatrix::from_fn(self.vectors.nrows(), self.vectors.ncols(), |i, j| {
            self.vectors[(i, j)] * f(self.values[j])
        });
        scaled * self.vectors.transpose()
    }

    pub fn sqrt(&self) -> DMatrix<f64> {
        self.apply(f64::sqrt)
    }

    pub fn inv_sqrt(&self) -> DMatrix<f64> {
        self.apply(|x| 1.0 / x.sqrt())
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        self.apply(|x| 1.0 / x)
    }

    /// Solves `M x = b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let coeffs = self.vectors.tr_mul(b).component_div(&self.values);
        &self.vectors * coeffs
    }
}

/// Square root of a symmetric positive definite matrix.
pub fn spd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(SpdFactor::new(m)?.sqrt())
}

/// Inverse square root of a symmetric positive definite matrix.
pub fn spd_inv_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(SpdFactor::new(m)?.inv_sqrt())
}
