use ndarray::Array1;

use super::{check_len, SmoothObjective, SolveError, SolveOptions, SolveReport, StopReason};
use crate::numkit::{sup_norm, Cholesky};
use crate::tol;

/// Damped Newton with step halving and an Armijo test.
///
/// Once the predicted decrease is below the rounding level of the value, a
/// full step is accepted if it lowers the gradient norm.
pub fn newton_minimize<F: SmoothObjective + ?Sized>(
    f: &F,
    x0: &Array1<f64>,
    opts: &SolveOptions,
) -> Result<SolveReport, SolveError> {
    check_len(f.dim(), x0.len())?;
    if !(opts.tol > 0.0) {
        return Err(SolveError::BadTolerance(opts.tol));
    }
    let mut x = x0.clone();
    let mut trajectory = opts.record_trajectory.then(|| vec![x.clone()]);
    let mut grad = f.gradient(&x);
    let mut gnorm = sup_norm(grad.view());
    let mut iterations = 0;
    let stop = loop {
        if gnorm <= opts.tol {
            break StopReason::GradientTolerance;
        }
        if !gnorm.is_finite() {
            break StopReason::Divergent;
        }
        if iterations >= opts.max_iter {
            break StopReason::IterationLimit;
        }
        let chol = Cholesky::new(&f.hessian(&x)).map_err(|e| SolveError::HessianNotPd {
            iteration: iterations,
            source: e,
        })?;
        let dir = -chol.solve(&grad)?;
        let fx = f.value(&x);
        let slope = grad.dot(&dir);

        // Below rounding level the value cannot certify a decrease; a full
        // step is then judged by the gradient norm.
        let rounding = slope.abs() <= 64.0 * f64::EPSILON * (1.0 + fx.abs());
        let mut accepted = None;
        if rounding {
            let xn = &x + &dir;
            if sup_norm(f.gradient(&xn).view()) < gnorm {
                accepted = Some(xn);
            }
        } else {
            let mut step = 1.0;
            for _ in 0..=tol::MAX_HALVINGS {
                let xn = &x + &(&dir * step);
                let fxn = f.value(&xn);
                if fxn.is_finite() && fxn <= fx + tol::ARMIJO * step * slope {
                    accepted = Some(xn);
                    break;
                }
                step *= 0.5;
            }
        }
        let Some(xn) = accepted else {
            break StopReason::StalledStep;
        };
        x = xn;
        iterations += 1;
        grad = f.gradient(&x);
        gnorm = sup_norm(grad.view());
        if let Some(t) = trajectory.as_mut() {
            t.push(x.clone());
        }
    };
    SolveReport {
        argmin: x,
        iterations,
        final_grad_supnorm: gnorm,
        converged: stop == StopReason::GradientTolerance,
        stop,
        trajectory,
    }
    .into_result()
}
