//! Dense symmetric positive-definite helpers.
//!
//! Every linear solve in the crate goes through [`Cholesky`]; nothing ever
//! forms an explicit inverse.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Largest accepted ratio of extreme eigenvalues of a covariance matrix.
pub const MAX_CONDITION_NUMBER: f64 = 1e12;

/// Eigenvalue floor used when repairing an estimated correlation matrix.
pub const CORRELATION_EIGEN_FLOOR: f64 = 1e-8;

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    lower: DMatrix<f64>,
}

impl Cholesky {
    /// Factorizes a symmetric matrix, reading only its lower triangle.
    ///
    /// Fails with the index of the first pivot that is not strictly positive.
    pub fn factor(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch {
                what: "matrix columns",
                expected: n,
                got: a.ncols(),
            });
        }
        let mut l = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for p in 0..j {
                d -= l[(j, p)] * l[(j, p)];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { pivot: j, value: d });
            }
            let ljj = d.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for p in 0..j {
                    s -= l[(i, p)] * l[(j, p)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Self { lower: l })
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    pub fn lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    /// Solves `L y = b`.
    pub fn forward(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let mut y = b.clone();
        for i in 0..n {
            let mut s = y[i];
            for p in 0..i {
                s -= self.lower[(i, p)] * y[p];
            }
            y[i] = s / self.lower[(i, i)];
        }
        y
    }

    /// Solves `Lᵀ x = y`.
    pub fn backward(&self, y: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let mut x = y.clone();
        for i in (0..n).rev() {
            let mut s = x[i];
            for p in (i + 1)..n {
                s -= self.lower[(p, i)] * x[p];
            }
            x[i] = s / self.lower[(i, i)];
        }
        x
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.backward(&self.forward(b))
    }

    /// `bᵀ A⁻¹ b`, computed as `‖L⁻¹ b‖²` so the result is never negative.
    pub fn inverse_quadratic_form(&self, b: &DVector<f64>) -> f64 {
        self.forward(b).norm_squared()
    }

    /// `xᵀ A x`, computed as `‖Lᵀ x‖²`.
    pub fn quadratic_form(&self, x: &DVector<f64>) -> f64 {
        (self.lower.transpose() * x).norm_squared()
    }
}

/// Ratio of the largest to the smallest eigenvalue of a symmetric matrix.
///
/// Returns infinity when the smallest eigenvalue is not positive.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(a.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Projects a symmetric matrix with unit diagonal onto a positive-definite
/// correlation matrix by clipping eigenvalues at `floor` and rescaling back
/// to a unit diagonal.
pub fn repair_correlation(corr: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let n = corr.nrows();
    let eig = SymmetricEigen::new(corr.clone());
    let clipped = eig.eigenvalues.map(|v| v.max(floor));
    let rebuilt =
        &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    let mut out = DMatrix::<f64>::identity(n, n);
    for i in 0..n {
        for j in 0..i {
            let v = rebuilt[(i, j)] / (rebuilt[(i, i)] * rebuilt[(j, j)]).sqrt();
            let v = v.clamp(-1.0, 1.0);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// Kahan–Babuška (Neumaier) compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
