//! Scalar diagnostics of the expansion bounds and the residual checkers that
//! compare measured expansion errors with them.

mod checks;
mod derived;
mod report;

pub use checks::{
    check_linear_sup_expansion, check_partial_bias, check_perturbed_partial,
    check_separable_sup_expansion, delta_row_norm, semi_orthogonality_probe, PartialSetup, QMap,
    SemiOrthoReport, SupExpansionCheck,
};
pub use derived::{
    derived_constants, inf_to_one_norm, rho_dual, rho_star, ExpansionDiagnostics, Flavor,
    PrereqFlags, RhoStarMethod, SIGN_VECTOR_MAX_Q,
};
pub use report::{write_residual_csv, write_residual_records, ResidualReport};

use thiserror::Error;

use crate::numkit::NumError;
use crate::objective::SolveError;

/// Norm in which the condition constants are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormTag {
    L2,
    Linf,
}

impl NormTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            NormTag::L2 => "l2",
            NormTag::Linf => "linf",
        }
    }
}

/// Radius (or radii) of the local set on which constants hold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Radii {
    /// `(r_theta, r_nu)` for the target and nuisance blocks.
    Block { theta: f64, nui: f64 },
    /// Sup-norm radius `r_inf`.
    Sup(f64),
    /// Radius `r_circ` of the nuisance ball in the marginal bounds.
    Circ(f64),
}

impl Radii {
    /// Largest radius.
    pub fn max(&self) -> f64 {
        match *self {
            Radii::Block { theta, nui } => theta.max(nui),
            Radii::Sup(r) | Radii::Circ(r) => r,
        }
    }
}

/// Third-order smoothness constants `tau3`, `d12`, `d21` on a local set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionConstants {
    pub tau3: f64,
    pub d12: f64,
    pub d21: f64,
    pub norm_tag: NormTag,
    pub radii: Radii,
    /// Metric domination factor, `D^2 <= kappa^2 F`.
    pub kappa: Option<f64>,
}

impl ConditionConstants {
    pub fn new(
        tau3: f64,
        d12: f64,
        d21: f64,
        norm_tag: NormTag,
        radii: Radii,
    ) -> Result<Self, ExpansionError> {
        for (name, v) in [("tau3", tau3), ("d12", d12), ("d21", d21)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(ExpansionError::InvalidConstant { name, value: v });
            }
        }
        Ok(Self {
            tau3,
            d12,
            d21,
            norm_tag,
            radii,
            kappa: None,
        })
    }

    /// All constants zero, as for a quadratic.
    pub fn zero(norm_tag: NormTag, radii: Radii) -> Self {
        Self {
            tau3: 0.0,
            d12: 0.0,
            d21: 0.0,
            norm_tag,
            radii,
            kappa: None,
        }
    }

    pub fn with_kappa(mut self, kappa: f64) -> Result<Self, ExpansionError> {
        if !(kappa >= 1.0) || !kappa.is_finite() {
            return Err(ExpansionError::InvalidConstant {
                name: "kappa",
                value: kappa,
            });
        }
        self.kappa = Some(kappa);
        Ok(self)
    }

    /// `max(d12, d21)`.
    pub fn d_max(&self) -> f64 {
        self.d12.max(self.d21)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExpansionError {
    #[error("constant {name} must be finite and nonnegative, got {value}")]
    InvalidConstant { name: &'static str, value: f64 },
    #[error("dltwb = {0} is not below 1")]
    DltwbTooLarge(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("metric must be diagonal here")]
    NonDiagonalMetric,
    #[error("metric does not satisfy D^2 <= F: smallest eigenvalue of F - D^2 is {min_eig}")]
    MetricDominanceViolated { min_eig: f64 },
    #[error(transparent)]
    Numeric(#[from] NumError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}
