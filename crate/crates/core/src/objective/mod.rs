//! Smooth convex objectives, perturbation wrappers and the two solvers
//! (damped Newton, cyclic coordinate descent).

mod coord;
mod newton;
mod partial;
mod perturb;

pub use coord::coordinate_descent_minimize;
pub use newton::newton_minimize;
pub use partial::{partial_minimize, FixedBlock, Restricted};
pub use perturb::{
    linear_perturb, separable_perturb, FnTerm, LinearPerturbed, Ridge, ScalarTerm,
    SeparablePerturbed, ZeroTerm,
};

use ndarray::Array1;
use thiserror::Error;

use crate::numkit::{NumError, SymMatrix};

/// Evaluation contract for a three-times differentiable function on `R^dim`.
pub trait SmoothObjective: Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &Array1<f64>) -> f64;
    fn gradient(&self, x: &Array1<f64>) -> Array1<f64>;
    fn hessian(&self, x: &Array1<f64>) -> SymMatrix;
    /// `<nabla^3 f(x), a (x) b (x) c>`.
    fn third_directional(
        &self,
        x: &Array1<f64>,
        a: &Array1<f64>,
        b: &Array1<f64>,
        c: &Array1<f64>,
    ) -> f64;

    /// `d f / d x_i`; override when a single partial is cheaper than the gradient.
    fn partial(&self, x: &Array1<f64>, i: usize) -> f64 {
        self.gradient(x)[i]
    }

    /// `d^2 f / d x_i^2`.
    fn partial2(&self, x: &Array1<f64>, i: usize) -> f64 {
        self.hessian(x)[(i, i)]
    }
}

impl<T: SmoothObjective + ?Sized> SmoothObjective for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &Array1<f64>) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &Array1<f64>) -> Array1<f64> {
        (**self).gradient(x)
    }
    fn hessian(&self, x: &Array1<f64>) -> SymMatrix {
        (**self).hessian(x)
    }
    fn third_directional(
        &self,
        x: &Array1<f64>,
        a: &Array1<f64>,
        b: &Array1<f64>,
        c: &Array1<f64>,
    ) -> f64 {
        (**self).third_directional(x, a, b, c)
    }
    fn partial(&self, x: &Array1<f64>, i: usize) -> f64 {
        (**self).partial(x, i)
    }
    fn partial2(&self, x: &Array1<f64>, i: usize) -> f64 {
        (**self).partial2(x, i)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("Hessian is not positive definite at iteration {iteration}")]
    HessianNotPd { iteration: usize, source: NumError },
    #[error("solver did not converge: {0:?}")]
    NotConverged(Box<SolveReport>),
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error(transparent)]
    Numeric(#[from] NumError),
}

/// Why a solver stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    GradientTolerance,
    IterationLimit,
    /// Line search could not make progress.
    StalledStep,
    /// A 1-D subproblem had no finite minimizer, or the model has none.
    Divergent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub argmin: Array1<f64>,
    pub iterations: usize,
    pub final_grad_supnorm: f64,
    pub converged: bool,
    pub stop: StopReason,
    pub trajectory: Option<Vec<Array1<f64>>>,
}

impl SolveReport {
    /// Turns a non-converged report into [`SolveError::NotConverged`].
    pub fn into_result(self) -> Result<SolveReport, SolveError> {
        if self.converged {
            Ok(self)
        } else {
            Err(SolveError::NotConverged(Box::new(self)))
        }
    }
}

/// Solver knobs. Line-search constants are fixed in [`crate::tol`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub record_trajectory: bool,
}

impl SolveOptions {
    pub fn newton() -> Self {
        Self {
            tol: crate::tol::SOLVER_TOL,
            max_iter: crate::tol::NEWTON_MAX_ITER,
            record_trajectory: false,
        }
    }

    pub fn coordinate() -> Self {
        Self {
            tol: crate::tol::SOLVER_TOL,
            max_iter: crate::tol::COORD_MAX_SWEEPS,
            record_trajectory: false,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn recording(mut self) -> Self {
        self.record_trajectory = true;
        self
    }
}

/// `f(x) = (x - m)^T F (x - m) / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticObjective {
    minimizer: Array1<f64>,
    curvature: SymMatrix,
}

impl QuadraticObjective {
    pub fn new(minimizer: Array1<f64>, curvature: SymMatrix) -> Result<Self, SolveError> {
        if minimizer.len() != curvature.dim() {
            return Err(SolveError::DimensionMismatch {
                expected: curvature.dim(),
                got: minimizer.len(),
            });
        }
        crate::numkit::Cholesky::new(&curvature)?;
        Ok(Self {
            minimizer,
            curvature,
        })
    }

    pub fn minimizer(&self) -> &Array1<f64> {
        &self.minimizer
    }

    pub fn curvature(&self) -> &SymMatrix {
        &self.curvature
    }
}

impl SmoothObjective for QuadraticObjective {
    fn dim(&self) -> usize {
        self.minimizer.len()
    }

    fn value(&self, x: &Array1<f64>) -> f64 {
        let d = x - &self.minimizer;
        0.5 * d.dot(&self.curvature.dot(&d))
    }

    fn gradient(&self, x: &Array1<f64>) -> Array1<f64> {
        self.curvature.dot(&(x - &self.minimizer))
    }

    fn hessian(&self, _x: &Array1<f64>) -> SymMatrix {
        self.curvature.clone()
    }

    fn third_directional(
        &self,
        _x: &Array1<f64>,
        _a: &Array1<f64>,
        _b: &Array1<f64>,
        _c: &Array1<f64>,
    ) -> f64 {
        0.0
    }

    fn partial(&self, x: &Array1<f64>, i: usize) -> f64 {
        let a = self.curvature.as_array();
        (0..x.len())
            .map(|k| a[[i, k]] * (x[k] - self.minimizer[k]))
            .sum()
    }

    fn partial2(&self, _x: &Array1<f64>, i: usize) -> f64 {
        self.curvature[(i, i)]
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<(), SolveError> {
    if expected != got {
        return Err(SolveError::DimensionMismatch { expected, got });
    }
    Ok(())
}
