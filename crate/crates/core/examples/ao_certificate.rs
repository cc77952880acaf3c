//! Linear-rate certificate of alternating minimization on a penalized BTL
//! objective split into halves.

use perturbopt::ao::contraction_step_violations;
use perturbopt::experiments::{ao_instance, ExperimentConfig};

fn main() {
    let cfg = ExperimentConfig {
        n_list: vec![20],
        reps: 1,
        seed: 5,
        ..Default::default()
    };
    let inst = ao_instance(&cfg, 20, 0).unwrap();
    let cert = inst.certificate.as_ref().unwrap();
    println!(
        "|P P^T| {:.4}, estimated rate {:.4}",
        cert.ppt_norm,
        inst.rate.as_ref().unwrap()
    );
    println!(
        "rho2 {:.4}, delta_nano {:.4}, radii {:?}",
        cert.rho2, cert.delta_nano, cert.radii
    );
    println!(
        "conditions {:?}, holds {}",
        cert.conditions_hold,
        cert.holds()
    );
    let bad = contraction_step_violations(&inst.trace, cert, &inst.d, 1e-9);
    println!("steps violating the contraction inequality: {bad:?}");
}
