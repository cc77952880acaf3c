use ndarray::Array1;

use super::{check_len, SmoothObjective, SolveError, SolveOptions, SolveReport, StopReason};
use crate::numkit::sup_norm;
use crate::tol;

/// Cyclic coordinate descent; each 1-D problem is solved by safeguarded
/// Newton inside a sign-change bracket.
///
/// `opts.max_iter` counts sweeps. With `record_trajectory` every coordinate
/// update is recorded, not only sweep ends.
pub fn coordinate_descent_minimize<F: SmoothObjective + ?Sized>(
    f: &F,
    x0: &Array1<f64>,
    opts: &SolveOptions,
) -> Result<SolveReport, SolveError> {
    check_len(f.dim(), x0.len())?;
    if !(opts.tol > 0.0) {
        return Err(SolveError::BadTolerance(opts.tol));
    }
    let n = x0.len();
    let mut x = x0.clone();
    let mut trajectory = opts.record_trajectory.then(|| vec![x.clone()]);
    let inner_tol = 0.1 * opts.tol;
    let mut gnorm = sup_norm(f.gradient(&x).view());
    let mut sweeps = 0;
    let stop = loop {
        if gnorm <= opts.tol {
            break StopReason::GradientTolerance;
        }
        if !gnorm.is_finite() {
            break StopReason::Divergent;
        }
        if sweeps >= opts.max_iter {
            break StopReason::IterationLimit;
        }
        let mut divergent = false;
        for i in 0..n {
            match minimize_coordinate(f, &mut x, i, inner_tol) {
                Some(()) => {
                    if let Some(t) = trajectory.as_mut() {
                        t.push(x.clone());
                    }
                }
                None => {
                    divergent = true;
                    break;
                }
            }
        }
        sweeps += 1;
        gnorm = sup_norm(f.gradient(&x).view());
        if divergent {
            break StopReason::Divergent;
        }
    };
    SolveReport {
        argmin: x,
        iterations: sweeps,
        final_grad_supnorm: gnorm,
        converged: stop == StopReason::GradientTolerance,
        stop,
        trajectory,
    }
    .into_result()
}

/// Moves `x[i]` to a root of `d f / d x_i`. Returns `None` when no sign
/// change is found, i.e. the coordinate problem is unbounded below.
fn minimize_coordinate<F: SmoothObjective + ?Sized>(
    f: &F,
    x: &mut Array1<f64>,
    i: usize,
    tol_1d: f64,
) -> Option<()> {
    let start = x[i];
    let deriv = |x: &mut Array1<f64>, s: f64| {
        x[i] = s;
        f.partial(x, i)
    };
    let d0 = deriv(x, start);
    if d0.abs() <= tol_1d {
        x[i] = start;
        return Some(());
    }
    // Bracket [lo, hi] with derivative < 0 at lo and > 0 at hi.
    let mut width = (1.0 + start.abs()) * tol::BRACKET_INIT;
    let (mut lo, mut hi) = (start, start);
    let mut found = false;
    for _ in 0..=tol::BRACKET_MAX_DOUBLINGS {
        let probe = if d0 > 0.0 {
            start - width
        } else {
            start + width
        };
        let dp = deriv(x, probe);
        if d0 > 0.0 && dp <= 0.0 {
            lo = probe;
            found = true;
        } else if d0 < 0.0 && dp >= 0.0 {
            hi = probe;
            found = true;
        }
        if found {
            break;
        }
        if d0 > 0.0 {
            hi = probe;
        } else {
            lo = probe;
        }
        width *= 2.0;
    }
    if !found {
        x[i] = start;
        return None;
    }

    // Newton from the current point, bisection when Newton leaves the
    // bracket or stops halving the step.
    let mut s = start.clamp(lo, hi);
    let mut ds = deriv(x, s);
    let mut last_step = hi - lo;
    for _ in 0..200 {
        if ds.abs() <= tol_1d || hi - lo <= 4.0 * f64::EPSILON * (1.0 + s.abs()) {
            break;
        }
        if ds < 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let curv = {
            x[i] = s;
            f.partial2(x, i)
        };
        let newton = s - ds / curv;
        let slow = (2.0 * ds).abs() > (last_step * curv).abs();
        let next = if curv > 0.0 && newton.is_finite() && newton > lo && newton < hi && !slow {
            newton
        } else {
            0.5 * (lo + hi)
        };
        last_step = next - s;
        s = next;
        ds = deriv(x, s);
    }
    x[i] = s;
    Some(())
}
