//! Alternating minimization on a coupled quadratic contracts by exactly
//! `|P P^T|` per round.

use ndarray::array;
use perturbopt::ao::{ao_run, quad_ao_identity_check, AoOptions};
use perturbopt::numkit::{BlockSplit, SymMatrix};
use perturbopt::objective::QuadraticObjective;

fn main() {
    let f = SymMatrix::new(array![
        [4.0, 1.0, 0.8, 0.3],
        [1.0, 3.0, 0.2, 0.9],
        [0.8, 0.2, 2.0, 0.4],
        [0.3, 0.9, 0.4, 2.5],
    ])
    .unwrap();
    let q = QuadraticObjective::new(array![1.0, -1.0, 0.5, 0.0], f).unwrap();
    let split = BlockSplit::leading(2, 4).unwrap();
    let theta0 = array![3.0, 2.0];
    let trace = ao_run(&q, &split, &theta0, 8, &AoOptions::default()).unwrap();
    println!("|P P^T| = {:.6}", trace.ppt_norm);
    for (t, w) in trace.theta_err_norms.windows(2).enumerate() {
        println!(
            "step {:>2}: error {:.3e}, ratio {:.6}",
            t + 1,
            w[1],
            w[1] / w[0]
        );
    }
    let dev = quad_ao_identity_check(&q, &split, &theta0, 5).unwrap();
    println!("identity deviation over 5 steps: {dev:.2e}");
}
