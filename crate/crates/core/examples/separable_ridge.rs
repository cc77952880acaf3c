//! Sup-norm expansion under a separable ridge perturbation, and the
//! quadratic decay of its remainder.

use perturbopt::btl::{
    fit_penalized_mle, sample_er_graph, sample_outcomes, BtlObjective, FitSolver, PenaltySpec,
    ScoreVector, WinsMode,
};
use perturbopt::expansions::{check_separable_sup_expansion, ConditionConstants, NormTag, Radii};
use perturbopt::objective::{Ridge, ScalarTerm};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 10;
    let g = sample_er_graph(n, 1.0, 3, &mut rng).unwrap();
    let truth = ScoreVector::sample_uniform(n, 0.0, 2.0, &mut rng);
    let obs = sample_outcomes(&g, &truth, &mut rng).unwrap();
    let f = BtlObjective::new(&obs, PenaltySpec::MeanShift(1.0), WinsMode::Empirical).unwrap();
    let joint = fit_penalized_mle(&obs, PenaltySpec::MeanShift(1.0), FitSolver::Newton, 1e-12)
        .unwrap()
        .argmin;
    let c = ConditionConstants::zero(NormTag::Linf, Radii::Sup(1.0));
    for lam in [0.1, 0.05, 0.025, 0.0125] {
        let terms: Vec<Box<dyn ScalarTerm>> = (0..n)
            .map(|_| Box::new(Ridge(lam)) as Box<dyn ScalarTerm>)
            .collect();
        let check = check_separable_sup_expansion(&f, terms, &c, Some(&joint)).unwrap();
        let r = check.report("fisher").unwrap();
        println!(
            "lambda {lam:<7} |D^-1 M| {:.4e}  leading {:.4e}  remainder {:.4e}",
            check.a_scaled, r.leading_term_norm, r.remainder_norm
        );
    }
}
