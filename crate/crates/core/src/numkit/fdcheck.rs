use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sup_norm;
use crate::objective::SmoothObjective;
use crate::tol;

const DIRECTION_SEED: u64 = 0xfd_c4ec;

/// Maximum relative discrepancies between analytic and differenced derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdReport {
    pub grad_err: f64,
    pub hess_err: f64,
    pub third_err: f64,
}

impl FdReport {
    pub fn max(&self) -> f64 {
        self.grad_err.max(self.hess_err).max(self.third_err)
    }
}

/// Central-difference check of gradient, Hessian and the directional third
/// derivative of `f` at `x`.
///
/// Errors are `max |analytic - differenced| / max(1, max |analytic|)`, taken
/// separately for each derivative order. The third derivative is checked
/// along three random direction triples.
pub fn finite_diff_check(f: &dyn SmoothObjective, x: &Array1<f64>) -> FdReport {
    let n = f.dim();
    let h = tol::FD_STEP * (1.0 + sup_norm(x.view()));
    let shifted = |i: usize, s: f64| {
        let mut y = x.clone();
        y[i] += s;
        y
    };

    let grad = f.gradient(x);
    let mut gerr = 0.0f64;
    for i in 0..n {
        let fd = (f.value(&shifted(i, h)) - f.value(&shifted(i, -h))) / (2.0 * h);
        gerr = gerr.max((fd - grad[i]).abs());
    }
    let grad_err = gerr / sup_norm(grad.view()).max(1.0);

    let hess = f.hessian(x);
    let mut herr = 0.0f64;
    for i in 0..n {
        let col = (f.gradient(&shifted(i, h)) - f.gradient(&shifted(i, -h))) / (2.0 * h);
        for j in 0..n {
            herr = herr.max((col[j] - hess[(j, i)]).abs());
        }
    }
    let hscale = hess.as_array().iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let hess_err = herr / hscale;

    let mut rng = ChaCha8Rng::seed_from_u64(DIRECTION_SEED);
    let mut unit = || {
        let v: Array1<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = v.dot(&v).sqrt().max(f64::MIN_POSITIVE);
        v / norm
    };
    let mut terr = 0.0f64;
    let mut tscale = 1.0f64;
    for _ in 0..3 {
        let (a, b, c) = (unit(), unit(), unit());
        let analytic = f.third_directional(x, &a, &b, &c);
        let plus = f.hessian(&(x + &(&a * h)));
        let minus = f.hessian(&(x - &(&a * h)));
        let fd = (b.dot(&plus.dot(&c)) - b.dot(&minus.dot(&c))) / (2.0 * h);
        terr = terr.max((fd - analytic).abs());
        tscale = tscale.max(analytic.abs());
    }
    FdReport {
        grad_err,
        hess_err,
        third_err: terr / tscale,
    }
}
