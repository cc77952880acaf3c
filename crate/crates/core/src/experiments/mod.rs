//! Seeded Monte Carlo studies on Bradley-Terry-Luce designs: dual-norm
//! coupling, sup-norm expansion of the penalized MLE, and alternating
//! minimization rates.

mod config;
mod emit;
mod studies;
mod summary;

pub use config::{ExperimentConfig, PRule, PenaltyKind, WhichRho};
pub use emit::{
    emit, read_records, sidecar_path, AoRecord, ExpansionRecord, Format, RhoRecord, StudyRecord,
};
pub use studies::{
    ao_instance, expansion_instance, fisher_at_truth, replication_seed, run_ao_study,
    run_expansion_study, run_rho_study, sample_replication, splitmix64, sup_expansion_check,
    AoInstance, ExpansionInstance, Replication, AO_RATE_FLOOR, RADIUS_SLACK,
};
pub use summary::{study_summaries, summarize, Summary};

use thiserror::Error;

use crate::ao::AoError;
use crate::btl::BtlError;
use crate::expansions::ExpansionError;
use crate::numkit::NumError;
use crate::objective::SolveError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Btl(#[from] BtlError),
    #[error(transparent)]
    Ao(#[from] AoError),
    #[error(transparent)]
    Expansion(#[from] ExpansionError),
    #[error(transparent)]
    Numeric(#[from] NumError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}
