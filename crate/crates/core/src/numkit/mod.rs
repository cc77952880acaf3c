//! Dense symmetric linear algebra and norm machinery.
//!
//! Everything here works on small dense matrices (dimension up to a few
//! hundred). Vectors are `ndarray::Array1<f64>`, general matrices
//! `ndarray::Array2<f64>`, and symmetric matrices the [`SymMatrix`] newtype.

mod fdcheck;
mod linalg;
mod neumann;

pub use fdcheck::{finite_diff_check, FdReport};
pub use linalg::{
    contraction_matrix, lu_solve, psd_power, spd_inverse, spd_solve, spectral_norm,
    spectral_norm_seeded, sym_eig, Cholesky, Contraction, Exponent, SymEigen,
};
pub use neumann::{neumann_sup_bounds, offdiag_row_sum, InverseBound, NeumannReport};

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use thiserror::Error;

use crate::tol;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumError {
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
    },
    #[error("matrix is singular for a negative power (eigenvalue {eigenvalue:e})")]
    SingularMatrix { eigenvalue: f64 },
    #[error("diagonal block is singular: {0}")]
    SingularBlock(Box<NumError>),
    #[error("inverse-series radius {rho} is not below one")]
    RhoNotLessThanOne { rho: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not symmetric (entry ({row}, {col}) differs by {diff:e})")]
    NotSymmetric { row: usize, col: usize, diff: f64 },
    #[error("matrix must be square and non-empty, got {rows}x{cols}")]
    BadShape { rows: usize, cols: usize },
    #[error("diagonal entry {index} is {value}, expected 1")]
    NotUnitDiagonal { index: usize, value: f64 },
    #[error("invalid block split: {0}")]
    InvalidSplit(String),
    #[error("metric entries must be positive (entry {index} = {value})")]
    NonPositiveMetric { index: usize, value: f64 },
}

/// A dense symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(Array2<f64>);

impl SymMatrix {
    /// Wraps `a` after checking that it is square, non-empty and symmetric to
    /// [`tol::SYMMETRY_REL`] relative to its largest entry.
    pub fn new(a: Array2<f64>) -> Result<Self, NumError> {
        let (rows, cols) = a.dim();
        if rows != cols || rows == 0 {
            return Err(NumError::BadShape { rows, cols });
        }
        let scale = a
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        for i in 0..rows {
            for j in (i + 1)..rows {
                let diff = (a[[i, j]] - a[[j, i]]).abs();
                if !(diff <= tol::SYMMETRY_REL * scale) {
                    return Err(NumError::NotSymmetric {
                        row: i,
                        col: j,
                        diff,
                    });
                }
            }
        }
        Ok(Self(a))
    }

    /// Builds a symmetric matrix from its upper triangle.
    pub fn from_upper(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut a = Array2::zeros((n, n));
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                a[[i, j]] = v;
                a[[j, i]] = v;
            }
        }
        Self(a)
    }

    pub(crate) fn from_array_unchecked(a: Array2<f64>) -> Self {
        debug_assert_eq!(a.nrows(), a.ncols());
        Self(a)
    }

    pub fn identity(n: usize) -> Self {
        Self(Array2::eye(n))
    }

    pub fn from_diag(d: &[f64]) -> Self {
        Self(Array2::from_diag(&Array1::from(d.to_vec())))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_array(self) -> Array2<f64> {
        self.0
    }

    pub fn diag(&self) -> Array1<f64> {
        self.0.diag().to_owned()
    }

    pub fn dot(&self, x: &Array1<f64>) -> Array1<f64> {
        self.0.dot(x)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(&self.0 * c)
    }

    /// Infinity operator norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        mat_norm_inf(self.0.view())
    }
}

impl std::ops::Index<(usize, usize)> for SymMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.0[[i, j]]
    }
}

/// Max absolute row sum of a general matrix.
pub fn mat_norm_inf(a: ArrayView2<f64>) -> f64 {
    a.rows()
        .into_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn sup_norm(x: ArrayView1<f64>) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn l2_norm(x: ArrayView1<f64>) -> f64 {
    x.dot(&x).sqrt()
}

/// Ordered target/nuisance partition of the coordinates `0..p+q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSplit {
    target: Vec<usize>,
    nuisance: Vec<usize>,
}

impl BlockSplit {
    pub fn new(target: Vec<usize>, nuisance: Vec<usize>) -> Result<Self, NumError> {
        if target.is_empty() || nuisance.is_empty() {
            return Err(NumError::InvalidSplit(
                "both blocks must be nonempty".into(),
            ));
        }
        let total = target.len() + nuisance.len();
        let mut seen = vec![false; total];
        for &i in target.iter().chain(nuisance.iter()) {
            if i >= total {
                return Err(NumError::InvalidSplit(format!(
                    "index {i} out of range 0..{total}"
                )));
            }
            if seen[i] {
                return Err(NumError::InvalidSplit(format!("index {i} appears twice")));
            }
            seen[i] = true;
        }
        Ok(Self { target, nuisance })
    }

    /// First `p` coordinates as target, the rest as nuisance.
    pub fn leading(p: usize, total: usize) -> Result<Self, NumError> {
        if p > total {
            return Err(NumError::InvalidSplit(format!(
                "p = {p} exceeds dimension {total}"
            )));
        }
        Self::new((0..p).collect(), (p..total).collect())
    }

    /// Splits `0..n` into halves with the larger half as target.
    pub fn halves(n: usize) -> Result<Self, NumError> {
        Self::leading(n.div_ceil(2), n)
    }

    pub fn target(&self) -> &[usize] {
        &self.target
    }

    pub fn nuisance(&self) -> &[usize] {
        &self.nuisance
    }

    pub fn p(&self) -> usize {
        self.target.len()
    }

    pub fn q(&self) -> usize {
        self.nuisance.len()
    }

    pub fn total(&self) -> usize {
        self.p() + self.q()
    }

    pub fn target_part(&self, x: &Array1<f64>) -> Array1<f64> {
        self.target.iter().map(|&i| x[i]).collect()
    }

    pub fn nuisance_part(&self, x: &Array1<f64>) -> Array1<f64> {
        self.nuisance.iter().map(|&i| x[i]).collect()
    }

    pub fn assemble(&self, theta: &Array1<f64>, nui: &Array1<f64>) -> Array1<f64> {
        let mut x = Array1::zeros(self.total());
        for (k, &i) in self.target.iter().enumerate() {
            x[i] = theta[k];
        }
        for (k, &i) in self.nuisance.iter().enumerate() {
            x[i] = nui[k];
        }
        x
    }

    pub(crate) fn check_dim(&self, n: usize) -> Result<(), NumError> {
        if n != self.total() {
            return Err(NumError::DimensionMismatch {
                expected: self.total(),
                got: n,
            });
        }
        Ok(())
    }
}

/// Blocks of a symmetric matrix under a [`BlockSplit`].
#[derive(Debug, Clone, PartialEq)]
pub struct BlockHessian {
    pub f_tt: SymMatrix,
    pub f_tn: Array2<f64>,
    pub f_nn: SymMatrix,
}

impl BlockHessian {
    pub fn from_full(f: &SymMatrix, split: &BlockSplit) -> Result<Self, NumError> {
        split.check_dim(f.dim())?;
        let a = f.as_array();
        let pick = |rows: &[usize], cols: &[usize]| {
            Array2::from_shape_fn((rows.len(), cols.len()), |(i, j)| a[[rows[i], cols[j]]])
        };
        Ok(Self {
            f_tt: SymMatrix::from_array_unchecked(pick(split.target(), split.target())),
            f_tn: pick(split.target(), split.nuisance()),
            f_nn: SymMatrix::from_array_unchecked(pick(split.nuisance(), split.nuisance())),
        })
    }

    pub fn p(&self) -> usize {
        self.f_tt.dim()
    }

    pub fn q(&self) -> usize {
        self.f_nn.dim()
    }
}

/// Positive scaling defining a local geometry.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricTensor {
    Diagonal(Array1<f64>),
    Full(SymMatrix),
}

impl MetricTensor {
    pub fn diagonal(d: Array1<f64>) -> Result<Self, NumError> {
        if let Some((index, &value)) = d.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(NumError::NonPositiveMetric { index, value });
        }
        Ok(Self::Diagonal(d))
    }

    /// Full metric; checked positive definite through a Cholesky factorization.
    pub fn full(m: SymMatrix) -> Result<Self, NumError> {
        Cholesky::new(&m)?;
        Ok(Self::Full(m))
    }

    /// Diagonal metric with `D_j^2 = F_jj`.
    pub fn sqrt_diag_of(f: &SymMatrix) -> Result<Self, NumError> {
        Self::diagonal(f.diag().mapv(f64::sqrt))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Diagonal(d) => d.len(),
            Self::Full(m) => m.dim(),
        }
    }

    /// `D x`.
    pub fn apply(&self, x: &Array1<f64>) -> Array1<f64> {
        match self {
            Self::Diagonal(d) => d * x,
            Self::Full(m) => m.dot(x),
        }
    }

    /// `D^{-1} x`.
    pub fn apply_inv(&self, x: &Array1<f64>) -> Result<Array1<f64>, NumError> {
        match self {
            Self::Diagonal(d) => Ok(x / d),
            Self::Full(m) => spd_solve(m, x),
        }
    }

    /// Dense matrix of `D`.
    pub fn to_matrix(&self) -> SymMatrix {
        match self {
            Self::Diagonal(d) => SymMatrix::from_diag(d.as_slice().unwrap_or(&d.to_vec())),
            Self::Full(m) => m.clone(),
        }
    }

    /// Dense matrix of `D^{-1}`.
    pub fn inverse_matrix(&self) -> Result<SymMatrix, NumError> {
        match self {
            Self::Diagonal(d) => Ok(SymMatrix::from_diag(
                &d.iter().map(|v| 1.0 / v).collect::<Vec<_>>(),
            )),
            Self::Full(m) => spd_inverse(m),
        }
    }

    /// `D^2`.
    pub fn squared(&self) -> SymMatrix {
        match self {
            Self::Diagonal(d) => SymMatrix::from_diag(&d.iter().map(|v| v * v).collect::<Vec<_>>()),
            Self::Full(m) => SymMatrix::from_array_unchecked(m.as_array().dot(m.as_array())),
        }
    }

    /// Restriction of a diagonal metric to a subset of coordinates.
    pub fn restrict(&self, idx: &[usize]) -> Result<Self, NumError> {
        match self {
            Self::Diagonal(d) => Ok(Self::Diagonal(idx.iter().map(|&i| d[i]).collect())),
            Self::Full(m) => {
                let a = m.as_array();
                Ok(Self::Full(SymMatrix::from_array_unchecked(
                    Array2::from_shape_fn((idx.len(), idx.len()), |(i, j)| a[[idx[i], idx[j]]]),
                )))
            }
        }
    }
}
