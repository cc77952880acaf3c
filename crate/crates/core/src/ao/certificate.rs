use ndarray::Array1;

use super::{AoError, AoTrace};
use crate::expansions::ConditionConstants;
use crate::numkit::{
    contraction_matrix, spectral_norm, sym_eig, BlockHessian, MetricTensor, SymMatrix,
};

/// Inequalities of the linear-rate certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CertificateFlags {
    /// `r_theta >= rho2^2 * gap`
    pub theta_radius: bool,
    /// `r_nu >= rho2 * gap`
    pub nui_radius: bool,
    /// `rho2 * tau3 * max(r_theta, r_nu) <= 2/3`
    pub tau3_radius: bool,
    /// `(1 + rho2^2) * delta_nano * gap < 1 - |P P^T|`
    pub start: bool,
}

impl CertificateFlags {
    pub fn all(&self) -> bool {
        self.theta_radius && self.nui_radius && self.tau3_radius && self.start
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AoCertificate {
    pub rho2: f64,
    pub delta_nano: f64,
    pub dltwb: f64,
    pub radii: (f64, f64),
    /// `|D (theta_0 - theta*)|`
    pub start_gap: f64,
    pub ppt_norm: f64,
    /// `|D^{-1} F_tn H^{-1}|` after any kappa rescaling.
    pub cross_norm: f64,
    /// Constants after any kappa rescaling.
    pub tau3: f64,
    pub d12: f64,
    pub d21: f64,
    pub conditions_hold: CertificateFlags,
}

impl AoCertificate {
    pub fn holds(&self) -> bool {
        self.conditions_hold.all()
    }

    /// Contraction factor of one step from an error of size `gap`.
    pub fn step_factor(&self, gap: f64) -> f64 {
        self.ppt_norm + (1.0 + self.rho2 * self.rho2) * self.delta_nano * gap
    }
}

fn dominance_gap(block: &SymMatrix, metric: &MetricTensor) -> Result<f64, AoError> {
    let diff = SymMatrix::from_array_unchecked(block.as_array() - metric.squared().as_array());
    Ok(sym_eig(&diff)?.min())
}

/// Diagonal metric `D = c diag(F)^{1/2}` with the largest `c` such that
/// `D^2 <= F`.
pub fn scaled_diag_metric(block: &SymMatrix) -> Result<MetricTensor, AoError> {
    let d = block.diag().mapv(f64::sqrt);
    let n = d.len();
    let normalized = SymMatrix::from_upper(n, |i, j| block[(i, j)] / (d[i] * d[j]));
    let c2 = sym_eig(&normalized)?.min() * (1.0 - 1e-10);
    if !(c2 > 0.0) {
        return Err(AoError::MetricDominanceViolated {
            block: "target",
            min_eig: c2,
        });
    }
    Ok(MetricTensor::diagonal(d * c2.sqrt())?)
}

/// Evaluates the local linear-rate certificate of alternating minimization.
///
/// The mixed constant entering the bounds is `max(d12, d21)`. With
/// `constants.kappa = Some(k)` the constants `(tau3, d12, d21)`, the cross
/// norm and `delta_nano` are rescaled by `(k^3, k, k^2, 1/k, k)`.
pub fn certify_convergence(
    bh: &BlockHessian,
    constants: &ConditionConstants,
    theta0_gap: f64,
    d: &MetricTensor,
    h: &MetricTensor,
) -> Result<AoCertificate, AoError> {
    let tol_of = |m: &SymMatrix| 1e-12 * m.norm_inf().max(1.0);
    let gt = dominance_gap(&bh.f_tt, d)?;
    if gt < -tol_of(&bh.f_tt) {
        return Err(AoError::MetricDominanceViolated {
            block: "target",
            min_eig: gt,
        });
    }
    let gn = dominance_gap(&bh.f_nn, h)?;
    if gn < -tol_of(&bh.f_nn) {
        return Err(AoError::MetricDominanceViolated {
            block: "nuisance",
            min_eig: gn,
        });
    }
    let ppt_norm = contraction_matrix(bh)?.ppt_norm;
    let scaled = d
        .inverse_matrix()?
        .as_array()
        .dot(&bh.f_tn)
        .dot(h.inverse_matrix()?.as_array());
    let mut cross = spectral_norm(scaled.view())?;

    let (mut tau3, mut d12, mut d21) = (constants.tau3, constants.d12, constants.d21);
    let k = constants.kappa.unwrap_or(1.0);
    tau3 *= k * k * k;
    d12 *= k;
    d21 *= k * k;
    cross /= k;

    let (r_theta, r_nu) = match constants.radii {
        crate::expansions::Radii::Block { theta, nui } => (theta, nui),
        other => (other.max(), other.max()),
    };
    let d_max = d12.max(d21);
    let dltwb = d_max * r_theta.max(r_nu);
    if !(dltwb < 1.0) {
        return Err(AoError::DltwbTooLarge(dltwb));
    }
    let rho2 = 1.5 / (1.0 - dltwb) * (cross + dltwb / 2.0);
    let delta_nano = k * (d_max * cross + d_max / 2.0 + tau3 * rho2 * rho2 / 3.0) / (1.0 - dltwb);
    let gap = theta0_gap;
    let conditions_hold = CertificateFlags {
        theta_radius: r_theta >= rho2 * rho2 * gap,
        nui_radius: r_nu >= rho2 * gap,
        tau3_radius: rho2 * tau3 * r_theta.max(r_nu) <= 2.0 / 3.0,
        start: (1.0 + rho2 * rho2) * delta_nano * gap < 1.0 - ppt_norm,
    };
    Ok(AoCertificate {
        rho2,
        delta_nano,
        dltwb,
        radii: (r_theta, r_nu),
        start_gap: gap,
        ppt_norm,
        cross_norm: cross,
        tau3,
        d12,
        d21,
        conditions_hold,
    })
}

/// Steps `t` at which
/// `|F^{1/2} e_t| <= (|P P^T| + (1 + rho2^2) delta_nano |D e_{t-1}|) |F^{1/2} e_{t-1}|`
/// fails, with `e_t = theta_t - theta*`. A relative slack `rel` absorbs
/// inner-solver error.
pub fn contraction_step_violations(
    trace: &AoTrace,
    cert: &AoCertificate,
    d: &MetricTensor,
    rel: f64,
) -> Vec<usize> {
    let mut bad = Vec::new();
    for t in 1..trace.theta_err_norms.len() {
        let prev = &trace.theta_iterates[t - 1] - &trace.theta_star;
        let gap = l2(&d.apply(&prev));
        let bound = cert.step_factor(gap) * trace.theta_err_norms[t - 1];
        if trace.theta_err_norms[t] > bound * (1.0 + rel) + rel {
            bad.push(t);
        }
    }
    bad
}

/// Steps at which `|eps_t| <= delta_nano rho2^2 |D (theta_{t-1} - theta*)|^2` fails.
pub fn eps_bound_violations(
    trace: &AoTrace,
    cert: &AoCertificate,
    d: &MetricTensor,
    abs: f64,
) -> Vec<usize> {
    let Some(ea) = trace.eps_alpha.as_ref() else {
        return Vec::new();
    };
    let mut bad = Vec::new();
    for (k, (eps, _)) in ea.iter().enumerate() {
        let prev = &trace.theta_iterates[k] - &trace.theta_star;
        let g = l2(&d.apply(&prev));
        if l2(eps) > cert.delta_nano * cert.rho2 * cert.rho2 * g * g + abs {
            bad.push(k + 1);
        }
    }
    bad
}

fn l2(v: &Array1<f64>) -> f64 {
    v.dot(v).sqrt()
}
