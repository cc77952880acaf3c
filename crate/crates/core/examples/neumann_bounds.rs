//! Sup-norm bounds for the inverse of a unit-diagonal matrix with small
//! off-diagonal row sums.

use ndarray::array;
use perturbopt::numkit::{neumann_sup_bounds, offdiag_row_sum};

fn main() {
    let b = array![[1.0, 0.4, 0.3], [0.4, 1.0, 0.2], [0.3, 0.2, 1.0]];
    let u = array![1.0, -2.0, 0.5];
    println!("rho = {:.2}", offdiag_row_sum(b.view()));
    let r = neumann_sup_bounds(b.view(), &u).unwrap();
    println!("{r:#?}");
    println!("all bounds hold: {}", r.all_hold());
}
