//! Bradley-Terry-Luce pairwise comparisons: graphs, sampling, the penalized
//! likelihood and its smoothness constants.

mod constants;
mod graph;
mod io;
pub mod link;
mod objective;

pub use constants::{btl_condition_constants, BtlConstants, ConstantsMethod};
pub use graph::{sample_er_graph, sample_outcomes, BtlObservation, ComparisonGraph, Edge};
pub use io::{read_observation, read_scores, write_observation, write_scores};
pub use objective::{fit_penalized_mle, noise_gradient, BtlObjective, FitSolver, WinsMode};

use ndarray::Array1;
use rand::Rng;
use thiserror::Error;

use crate::objective::{SolveError, SolveReport};

#[derive(Debug, Error)]
pub enum BtlError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid edge ({j}, {m}) for {n} items")]
    InvalidEdge { j: usize, m: usize, n: usize },
    #[error("duplicate edge ({j}, {m})")]
    DuplicateEdge { j: usize, m: usize },
    #[error("edge ({j}, {m}) has zero comparisons")]
    EmptyEdge { j: usize, m: usize },
    #[error("wins {wins} outside [0, {count}] on edge ({j}, {m})")]
    WinsOutOfRange {
        j: usize,
        m: usize,
        wins: f64,
        count: u32,
    },
    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("metric must be diagonal")]
    NonDiagonalMetric,
    #[error("score vector has a non-finite entry at {0}")]
    NonFiniteScore(usize),
    #[error("scores are not identifiable: {0}")]
    NotIdentifiable(String),
    #[error("MLE did not converge after {} iterations (gradient {:e})", .0.iterations, .0.final_grad_supnorm)]
    NotConverged(Box<SolveReport>),
    #[error(transparent)]
    Solve(SolveError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path}: {msg}")]
    Format { path: String, msg: String },
}

impl From<SolveError> for BtlError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::NotConverged(r) => BtlError::NotConverged(r),
            other => BtlError::Solve(other),
        }
    }
}

/// Quadratic penalty `|G x|^2 / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PenaltySpec {
    None,
    /// `G^2 = g^2 e e^T` with `e = (1, ..., 1) / sqrt(n)`.
    MeanShift(f64),
    /// `G^2 = g^2 I`.
    Ridge(f64),
}

impl PenaltySpec {
    pub fn validate(&self) -> Result<(), BtlError> {
        match *self {
            PenaltySpec::None => Ok(()),
            PenaltySpec::MeanShift(g) | PenaltySpec::Ridge(g) if g >= 0.0 && g.is_finite() => {
                Ok(())
            }
            PenaltySpec::MeanShift(g) | PenaltySpec::Ridge(g) => Err(BtlError::InvalidParameter {
                name: "gsq",
                value: g,
            }),
        }
    }

    pub fn gsq(&self) -> f64 {
        match *self {
            PenaltySpec::None => 0.0,
            PenaltySpec::MeanShift(g) | PenaltySpec::Ridge(g) => g,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PenaltySpec::None => "none",
            PenaltySpec::MeanShift(_) => "mean_shift",
            PenaltySpec::Ridge(_) => "ridge",
        }
    }

    /// Parses `none`, `mean_shift` or `ridge` with strength `gsq`.
    pub fn parse(kind: &str, gsq: f64) -> Option<Self> {
        match kind {
            "none" => Some(PenaltySpec::None),
            "mean_shift" => Some(PenaltySpec::MeanShift(gsq)),
            "ridge" => Some(PenaltySpec::Ridge(gsq)),
            _ => None,
        }
    }

    /// `(G^2)_{jm}` for `n` items.
    pub fn entry(&self, n: usize, j: usize, m: usize) -> f64 {
        match *self {
            PenaltySpec::None => 0.0,
            PenaltySpec::MeanShift(g) => g / n as f64,
            PenaltySpec::Ridge(g) => {
                if j == m {
                    g
                } else {
                    0.0
                }
            }
        }
    }

    /// `G^2 x`.
    pub fn apply(&self, x: &Array1<f64>) -> Array1<f64> {
        match *self {
            PenaltySpec::None => Array1::zeros(x.len()),
            PenaltySpec::MeanShift(g) => Array1::from_elem(x.len(), g * x.mean().unwrap_or(0.0)),
            PenaltySpec::Ridge(g) => x * g,
        }
    }

    /// `|G x|^2 / 2`.
    pub fn value(&self, x: &Array1<f64>) -> f64 {
        match *self {
            PenaltySpec::None => 0.0,
            PenaltySpec::MeanShift(g) => {
                let s = x.sum();
                0.5 * g * s * s / x.len() as f64
            }
            PenaltySpec::Ridge(g) => 0.5 * g * x.dot(x),
        }
    }
}

/// Item scores with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector(Array1<f64>);

impl ScoreVector {
    pub fn new(values: Array1<f64>) -> Result<Self, BtlError> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(BtlError::NonFiniteScore(i));
        }
        Ok(Self(values))
    }

    /// Independent `U[lo, hi]` scores.
    pub fn sample_uniform<R: Rng + ?Sized>(n: usize, lo: f64, hi: f64, rng: &mut R) -> Self {
        Self(
            (0..n)
                .map(|_| lo + (hi - lo) * rng.random::<f64>())
                .collect(),
        )
    }

    /// Shifted to zero mean.
    pub fn centered(&self) -> Self {
        let m = self.0.mean().unwrap_or(0.0);
        Self(self.0.mapv(|v| v - m))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_array(&self) -> &Array1<f64> {
        &self.0
    }

    pub fn into_array(self) -> Array1<f64> {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn penalty_forms() {
        let x = array![1.0, 2.0, 3.0];
        assert_eq!(PenaltySpec::MeanShift(3.0).apply(&x), array![6.0, 6.0, 6.0]);
        assert_eq!(
            PenaltySpec::MeanShift(3.0).value(&x),
            0.5 * 3.0 * 36.0 / 3.0
        );
        assert_eq!(PenaltySpec::Ridge(2.0).value(&x), 14.0);
        assert_eq!(PenaltySpec::Ridge(2.0).entry(3, 0, 1), 0.0);
        assert_eq!(PenaltySpec::MeanShift(3.0).entry(3, 0, 1), 1.0);
        assert!(PenaltySpec::Ridge(-1.0).validate().is_err());
        assert_eq!(
            PenaltySpec::parse("mean_shift", 1.0),
            Some(PenaltySpec::MeanShift(1.0))
        );
    }

    #[test]
    fn score_vector_rejects_nan() {
        assert!(matches!(
            ScoreVector::new(array![0.0, f64::NAN]),
            Err(BtlError::NonFiniteScore(1))
        ));
        let s = ScoreVector::new(array![1.0, 3.0]).unwrap().centered();
        assert_eq!(s.as_array(), &array![-1.0, 1.0]);
    }
}
