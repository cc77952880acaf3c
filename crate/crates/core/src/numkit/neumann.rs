//! Sup-norm bounds for `B^{-1}` when `B = I - Delta` with `|Delta|_{inf->inf} < 1`.

use ndarray::{Array1, ArrayView2};

use super::{lu_solve, sup_norm, NumError};
use crate::tol;

#[derive(Debug, Clone, PartialEq)]
pub struct InverseBound {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// `rhs - lhs`; negative on a violation.
    pub slack: f64,
}

impl InverseBound {
    fn new(lhs: f64, rhs: f64, allowance: f64) -> Self {
        Self {
            lhs,
            rhs,
            holds: lhs <= rhs + allowance,
            slack: rhs - lhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeumannReport {
    pub rho: f64,
    /// `|B^{-1} u| <= |u| / (1 - rho)`
    pub inverse: InverseBound,
    /// `|(B^{-1} - I) u| <= rho |u| / (1 - rho)`
    pub first_order: InverseBound,
    /// `|(B^{-1} - 2I + B) u| <= rho^2 |u| / (1 - rho)`
    pub second_order: InverseBound,
}

impl NeumannReport {
    pub fn all_hold(&self) -> bool {
        self.inverse.holds && self.first_order.holds && self.second_order.holds
    }
}

/// Max absolute off-diagonal row sum, i.e. `sup_{|u|_inf <= 1} |(B - I) u|_inf`
/// for a unit-diagonal `B`.
pub fn offdiag_row_sum(b: ArrayView2<f64>) -> f64 {
    b.rows()
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            r.iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, v)| v.abs())
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// Checks the three inverse-series inequalities for `B` on the vector `u`.
pub fn neumann_sup_bounds(b: ArrayView2<f64>, u: &Array1<f64>) -> Result<NeumannReport, NumError> {
    let (rows, cols) = b.dim();
    if rows != cols || rows == 0 {
        return Err(NumError::BadShape { rows, cols });
    }
    if u.len() != rows {
        return Err(NumError::DimensionMismatch {
            expected: rows,
            got: u.len(),
        });
    }
    for i in 0..rows {
        if (b[[i, i]] - 1.0).abs() > tol::UNIT_DIAG_ABS {
            return Err(NumError::NotUnitDiagonal {
                index: i,
                value: b[[i, i]],
            });
        }
    }
    let rho = offdiag_row_sum(b);
    if !(rho < 1.0) {
        return Err(NumError::RhoNotLessThanOne { rho });
    }
    let binv_u = lu_solve(b, u)?;
    let bu = b.dot(u);
    let un = sup_norm(u.view());
    let scale = un / (1.0 - rho);
    let allowance = tol::NEUMANN_SLACK_REL * scale.max(f64::MIN_POSITIVE);

    let first = &binv_u - u;
    let second = &binv_u - &(u * 2.0) + &bu;
    Ok(NeumannReport {
        rho,
        inverse: InverseBound::new(sup_norm(binv_u.view()), scale, allowance),
        first_order: InverseBound::new(sup_norm(first.view()), rho * scale, allowance),
        second_order: InverseBound::new(sup_norm(second.view()), rho * rho * scale, allowance),
    })
}
