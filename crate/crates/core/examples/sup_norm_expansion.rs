//! Leading term and remainder of the penalized MLE in sup-norm, with the
//! theoretical bounds and their prerequisite flags.

use perturbopt::experiments::{sample_replication, sup_expansion_check, ExperimentConfig};

fn main() {
    let cfg = ExperimentConfig {
        n_list: vec![100],
        reps: 1,
        seed: 3,
        ..Default::default()
    };
    let r = sample_replication(&cfg, 100, 0).unwrap();
    let (check, constants) =
        sup_expansion_check(&r.obs, &r.truth, cfg.penalty_spec(), r.seed).unwrap();
    println!(
        "rho_dual {:.4}, rho_dual_l2 {:.4}, |D^-1 A| {:.4}",
        check.rho_dual, check.rho_dual_l2, check.a_scaled
    );
    println!(
        "tau3 {:.4}, d12 {:.4}, d21 {:.4}",
        constants.tau3, constants.d12, constants.d21
    );
    println!(
        "{:<11} {:>11} {:>11} {:>11}  asserted",
        "variant", "leading", "remainder", "bound"
    );
    for rep in &check.reports {
        println!(
            "{:<11} {:>11.4e} {:>11.4e} {:>11.4e}  {}",
            rep.variant,
            rep.leading_term_norm,
            rep.remainder_norm,
            rep.bound_value,
            rep.asserted()
        );
    }
}
