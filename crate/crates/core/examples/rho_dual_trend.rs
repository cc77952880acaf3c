//! Mean dual-norm coupling of the penalized Fisher matrix as the design grows.

use perturbopt::experiments::{run_rho_study, study_summaries, ExperimentConfig};

fn main() {
    let cfg = ExperimentConfig {
        n_list: vec![50, 100, 200],
        reps: 10,
        seed: 1,
        ..Default::default()
    };
    let recs = run_rho_study(&cfg).unwrap();
    let l2 = study_summaries(&recs, |r| if r.connected { r.rho_dual_l2 } else { None });
    let exact = study_summaries(&recs, |r| if r.connected { r.rho_dual } else { None });
    for (n, (s, excluded)) in &l2 {
        let s = s.as_ref().unwrap();
        let e = exact[n].0.as_ref().unwrap();
        println!(
            "n={n:>4}: rho_dual_l2 {:.4} +- {:.4}, rho_dual {:.4} +- {:.4}, excluded {excluded}",
            s.mean, s.sd, e.mean, e.sd
        );
    }
}
