//! Sample an Erdos-Renyi comparison design, fit penalized scores and compare
//! with the truth.

use perturbopt::btl::{
    fit_penalized_mle, sample_er_graph, sample_outcomes, FitSolver, PenaltySpec, ScoreVector,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 60;
    let graph = sample_er_graph(n, 0.3, 4, &mut rng).unwrap();
    let truth = ScoreVector::sample_uniform(n, 0.0, 2.0, &mut rng).centered();
    let obs = sample_outcomes(&graph, &truth, &mut rng).unwrap();
    println!(
        "{} items, {} edges, connected: {}",
        n,
        graph.edges().len(),
        graph.is_connected()
    );
    for solver in [FitSolver::Newton, FitSolver::Coordinate] {
        let fit = fit_penalized_mle(&obs, PenaltySpec::MeanShift(1.0), solver, 1e-10).unwrap();
        let err = (&fit.argmin - truth.as_array())
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        println!(
            "{solver:?}: {} iterations, sup error vs truth {err:.4}",
            fit.iterations
        );
    }
}
