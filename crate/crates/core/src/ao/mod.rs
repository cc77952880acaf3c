//! Alternating minimization over a target/nuisance split, its exact
//! recursion on quadratics and a local linear-rate certificate.

mod certificate;
mod rate;
mod run;

pub use certificate::{
    certify_convergence, contraction_step_violations, eps_bound_violations, scaled_diag_metric,
    AoCertificate, CertificateFlags,
};
pub use rate::{estimate_rate, estimate_rate_with_floor, write_trace_csv};
pub use run::{ao_run, quad_ao_identity_check, AoOptions, AoTrace};

use thiserror::Error;

use crate::expansions::ExpansionError;
use crate::numkit::NumError;
use crate::objective::SolveError;

#[derive(Debug, Error)]
pub enum AoError {
    #[error("inner solve failed at step {step}: {source}")]
    InnerSolveFailed { step: usize, source: SolveError },
    #[error("joint minimizer could not be computed: {0}")]
    JointSolveFailed(SolveError),
    #[error("need at least {needed} post-burn-in steps, got {got}")]
    InsufficientSteps { needed: usize, got: usize },
    #[error("step count must be at least 1")]
    ZeroSteps,
    #[error("{block} metric is not dominated by its Hessian block (smallest eigenvalue of the difference {min_eig:e})")]
    MetricDominanceViolated { block: &'static str, min_eig: f64 },
    #[error("dltwb = {0} is not below 1")]
    DltwbTooLarge(f64),
    #[error(transparent)]
    Numeric(#[from] NumError),
    #[error(transparent)]
    Expansion(#[from] ExpansionError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}
