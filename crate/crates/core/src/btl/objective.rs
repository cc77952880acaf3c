use ndarray::Array1;

use super::link::{phi2, phi3, sigmoid, softplus};
use super::{BtlError, BtlObservation, ComparisonGraph, PenaltySpec};
use crate::numkit::SymMatrix;
use crate::objective::{
    coordinate_descent_minimize, newton_minimize, SmoothObjective, SolveOptions, SolveReport,
    StopReason,
};

/// Source of the win counts in the likelihood.
#[derive(Debug, Clone, PartialEq)]
pub enum WinsMode {
    /// Observed `S_jm`.
    Empirical,
    /// `N_jm sigma(truth_j - truth_m)`, giving the expected likelihood.
    Expected(Array1<f64>),
}

/// Penalized negative log-likelihood
/// `L(x) = -sum_{j<m} [(x_j - x_m) S_jm - N_jm phi(x_j - x_m)] + |G x|^2 / 2`.
#[derive(Debug, Clone)]
pub struct BtlObjective {
    graph: ComparisonGraph,
    wins: Vec<f64>,
    penalty: PenaltySpec,
}

impl BtlObjective {
    pub fn new(
        obs: &BtlObservation,
        penalty: PenaltySpec,
        mode: WinsMode,
    ) -> Result<Self, BtlError> {
        penalty.validate()?;
        let graph = obs.graph().clone();
        let wins = match mode {
            WinsMode::Empirical => obs.wins().to_vec(),
            WinsMode::Expected(truth) => BtlObservation::expected(graph.clone(), &truth)?
                .wins()
                .to_vec(),
        };
        Ok(Self {
            graph,
            wins,
            penalty,
        })
    }

    /// Expected likelihood of a design under `truth`.
    pub fn expected(
        graph: &ComparisonGraph,
        truth: &Array1<f64>,
        penalty: PenaltySpec,
    ) -> Result<Self, BtlError> {
        penalty.validate()?;
        let obs = BtlObservation::expected(graph.clone(), truth)?;
        Ok(Self {
            graph: graph.clone(),
            wins: obs.wins().to_vec(),
            penalty,
        })
    }

    pub fn graph(&self) -> &ComparisonGraph {
        &self.graph
    }

    pub fn penalty(&self) -> PenaltySpec {
        self.penalty
    }

    pub fn wins(&self) -> &[f64] {
        &self.wins
    }

    /// Hessian without the penalty (graph Laplacian weighted by `N phi''`).
    pub fn likelihood_hessian(&self, x: &Array1<f64>) -> SymMatrix {
        let n = self.graph.n();
        let mut h = ndarray::Array2::zeros((n, n));
        for e in self.graph.edges() {
            let w = e.count as f64 * phi2(x[e.j] - x[e.m]);
            h[[e.j, e.j]] += w;
            h[[e.m, e.m]] += w;
            h[[e.j, e.m]] -= w;
            h[[e.m, e.j]] -= w;
        }
        SymMatrix::from_array_unchecked(h)
    }
}

impl SmoothObjective for BtlObjective {
    fn dim(&self) -> usize {
        self.graph.n()
    }

    fn value(&self, x: &Array1<f64>) -> f64 {
        let lik: f64 = self
            .graph
            .edges()
            .iter()
            .zip(&self.wins)
            .map(|(e, &s)| {
                let d = x[e.j] - x[e.m];
                e.count as f64 * softplus(d) - d * s
            })
            .sum();
        lik + self.penalty.value(x)
    }

    fn gradient(&self, x: &Array1<f64>) -> Array1<f64> {
        let mut g = self.penalty.apply(x);
        for (e, &s) in self.graph.edges().iter().zip(&self.wins) {
            let r = e.count as f64 * sigmoid(x[e.j] - x[e.m]) - s;
            g[e.j] += r;
            g[e.m] -= r;
        }
        g
    }

    fn hessian(&self, x: &Array1<f64>) -> SymMatrix {
        let n = self.graph.n();
        let mut h = self.likelihood_hessian(x).into_array();
        match self.penalty {
            PenaltySpec::None => {}
            PenaltySpec::MeanShift(g) => h.mapv_inplace(|v| v + g / n as f64),
            PenaltySpec::Ridge(g) => {
                for j in 0..n {
                    h[[j, j]] += g;
                }
            }
        }
        SymMatrix::from_array_unchecked(h)
    }

    fn third_directional(
        &self,
        x: &Array1<f64>,
        a: &Array1<f64>,
        b: &Array1<f64>,
        c: &Array1<f64>,
    ) -> f64 {
        self.graph
            .edges()
            .iter()
            .map(|e| {
                let (j, m) = (e.j, e.m);
                e.count as f64 * phi3(x[j] - x[m]) * (a[j] - a[m]) * (b[j] - b[m]) * (c[j] - c[m])
            })
            .sum()
    }

    fn partial(&self, x: &Array1<f64>, i: usize) -> f64 {
        let n = x.len();
        let mut g = match self.penalty {
            PenaltySpec::None => 0.0,
            PenaltySpec::MeanShift(gsq) => gsq * x.sum() / n as f64,
            PenaltySpec::Ridge(gsq) => gsq * x[i],
        };
        for &(_, idx) in self.graph.neighbours(i) {
            let e = self.graph.edges()[idx];
            let r = e.count as f64 * sigmoid(x[e.j] - x[e.m]) - self.wins[idx];
            g += if e.j == i { r } else { -r };
        }
        g
    }

    fn partial2(&self, x: &Array1<f64>, i: usize) -> f64 {
        let pen = self.penalty.entry(x.len(), i, i);
        pen + self
            .graph
            .neighbours(i)
            .iter()
            .map(|&(k, idx)| self.graph.edges()[idx].count as f64 * phi2(x[i] - x[k]))
            .sum::<f64>()
    }
}

/// `A = grad L(x) - grad E L(x)`, which does not depend on `x`.
pub fn noise_gradient(obs: &BtlObservation, truth: &Array1<f64>) -> Result<Array1<f64>, BtlError> {
    let graph = obs.graph();
    if truth.len() != graph.n() {
        return Err(BtlError::DimensionMismatch {
            expected: graph.n(),
            got: truth.len(),
        });
    }
    let mut a = Array1::zeros(graph.n());
    for (e, &s) in graph.edges().iter().zip(obs.wins()) {
        let r = s - e.count as f64 * sigmoid(truth[e.j] - truth[e.m]);
        a[e.j] -= r;
        a[e.m] += r;
    }
    Ok(a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitSolver {
    Newton,
    Coordinate,
}

/// Penalized MLE from a zero start.
///
/// Without a strongly convex penalty a finite minimizer needs every
/// component's win relation to be strongly connected; when it is not, the
/// solver runs anyway and the result is reported as `NotConverged`.
pub fn fit_penalized_mle(
    obs: &BtlObservation,
    penalty: PenaltySpec,
    solver: FitSolver,
    tol: f64,
) -> Result<SolveReport, BtlError> {
    let graph = obs.graph();
    match penalty {
        PenaltySpec::None => {
            return Err(BtlError::NotIdentifiable(
                "no penalty: the likelihood is invariant under shifts".into(),
            ))
        }
        PenaltySpec::MeanShift(g) if g <= 0.0 => {
            return Err(BtlError::NotIdentifiable(
                "mean_shift penalty needs gsq > 0".into(),
            ))
        }
        PenaltySpec::MeanShift(_) if !graph.is_connected() => {
            return Err(BtlError::NotIdentifiable(format!(
                "comparison graph has {} components; mean_shift fixes only one shift",
                graph.component_count()
            )))
        }
        PenaltySpec::Ridge(g) if g <= 0.0 => {
            return Err(BtlError::NotIdentifiable(
                "ridge penalty needs gsq > 0".into(),
            ))
        }
        _ => {}
    }
    let f = BtlObjective::new(obs, penalty, WinsMode::Empirical)?;
    let x0 = Array1::zeros(graph.n());
    let finite = match penalty {
        PenaltySpec::Ridge(g) if g > 0.0 => true,
        _ => obs.wins_strongly_connected(),
    };
    let result = match solver {
        FitSolver::Newton => newton_minimize(&f, &x0, &SolveOptions::newton().with_tol(tol)),
        FitSolver::Coordinate => {
            coordinate_descent_minimize(&f, &x0, &SolveOptions::coordinate().with_tol(tol))
        }
    };
    match result {
        Ok(report) if finite => Ok(report),
        Ok(mut report) => {
            report.converged = false;
            report.stop = StopReason::Divergent;
            Err(BtlError::NotConverged(Box::new(report)))
        }
        Err(e) => Err(e.into()),
    }
}
