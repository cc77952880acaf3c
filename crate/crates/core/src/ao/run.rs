use ndarray::Array1;

use super::AoError;
use crate::numkit::{
    contraction_matrix, psd_power, sup_norm, BlockHessian, BlockSplit, Exponent, SymMatrix,
};
use crate::objective::{
    newton_minimize, partial_minimize, FixedBlock, QuadraticObjective, SmoothObjective,
    SolveOptions,
};
use crate::tol;

#[derive(Debug, Clone, PartialEq)]
pub struct AoOptions {
    /// Gradient tolerance of each partial minimization.
    pub inner_tol: f64,
    /// Joint minimizer; solved to `REFERENCE_TOL` when absent.
    pub joint_minimizer: Option<Array1<f64>>,
    /// Record the residual vectors `(eps_t, alpha_t)`.
    pub record_eps_alpha: bool,
}

impl Default for AoOptions {
    fn default() -> Self {
        Self {
            inner_tol: tol::SOLVER_TOL,
            joint_minimizer: None,
            record_eps_alpha: true,
        }
    }
}

/// History of an alternating minimization run.
///
/// `theta_iterates[t]` is `theta_t` for `t = 0..=T`; `nui_iterates[t - 1]`
/// is `nu_t` for `t = 1..=T`. Error norms are measured in the Hessian
/// blocks at the joint minimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct AoTrace {
    pub theta_iterates: Vec<Array1<f64>>,
    pub nui_iterates: Vec<Array1<f64>>,
    /// `|F_tt^{1/2} (theta_t - theta*)|`, length `T + 1`.
    pub theta_err_norms: Vec<f64>,
    /// `|F_nn^{1/2} (nu_t - nu*)|`, length `T`.
    pub nui_err_norms: Vec<f64>,
    /// `eps_t = F_tt^{1/2}(theta_t - theta*) + P F_nn^{1/2}(nu_t - nu*)` and
    /// `alpha_t = F_nn^{1/2}(nu_t - nu*) + P^T F_tt^{1/2}(theta_{t-1} - theta*)`.
    pub eps_alpha: Option<Vec<(Array1<f64>, Array1<f64>)>>,
    pub ppt_norm: f64,
    pub theta_star: Array1<f64>,
    pub nui_star: Array1<f64>,
    /// `f(theta_{t-1}, nu_t)` and `f(theta_t, nu_t)` per step.
    pub values: Vec<(f64, f64)>,
    /// Scaled errors `F_tt^{1/2}(theta_t - theta*)`, length `T + 1`.
    pub theta_scaled_errors: Vec<Array1<f64>>,
    /// Hessian blocks at the joint minimizer.
    pub blocks: BlockHessian,
}

impl AoTrace {
    pub fn steps(&self) -> usize {
        self.nui_iterates.len()
    }
}

/// Alternates `nu_t = argmin_nu f(theta_{t-1}, nu)` and
/// `theta_t = argmin_theta f(theta, nu_t)` for `steps` rounds.
pub fn ao_run<F: SmoothObjective + ?Sized>(
    f: &F,
    split: &BlockSplit,
    theta0: &Array1<f64>,
    steps: usize,
    opts: &AoOptions,
) -> Result<AoTrace, AoError> {
    if steps == 0 {
        return Err(AoError::ZeroSteps);
    }
    if f.dim() != split.total() {
        return Err(AoError::Numeric(
            crate::numkit::NumError::DimensionMismatch {
                expected: split.total(),
                got: f.dim(),
            },
        ));
    }
    if theta0.len() != split.p() {
        return Err(AoError::Numeric(
            crate::numkit::NumError::DimensionMismatch {
                expected: split.p(),
                got: theta0.len(),
            },
        ));
    }
    let joint = match &opts.joint_minimizer {
        Some(x) => x.clone(),
        None => {
            let x0 = Array1::zeros(split.total());
            newton_minimize(f, &x0, &SolveOptions::newton().with_tol(tol::REFERENCE_TOL))
                .map_err(AoError::JointSolveFailed)?
                .argmin
        }
    };
    let theta_star = split.target_part(&joint);
    let nui_star = split.nuisance_part(&joint);
    let blocks = BlockHessian::from_full(&f.hessian(&joint), split)?;
    let contraction = contraction_matrix(&blocks)?;
    let half_tt = psd_power(&blocks.f_tt, Exponent::Half)?;
    let half_nn = psd_power(&blocks.f_nn, Exponent::Half)?;
    let p = &contraction.p;

    let inner = SolveOptions::newton().with_tol(opts.inner_tol);
    let mut theta = theta0.clone();
    let mut nui = nui_star.clone();
    let first_err = half_tt.dot(&(&theta - &theta_star));
    let mut trace = AoTrace {
        theta_iterates: vec![theta.clone()],
        nui_iterates: Vec::with_capacity(steps),
        theta_err_norms: vec![l2(&first_err)],
        nui_err_norms: Vec::with_capacity(steps),
        eps_alpha: opts.record_eps_alpha.then(Vec::new),
        ppt_norm: contraction.ppt_norm,
        theta_star: theta_star.clone(),
        nui_star: nui_star.clone(),
        values: Vec::with_capacity(steps),
        theta_scaled_errors: vec![first_err],
        blocks: blocks.clone(),
    };
    for step in 1..=steps {
        nui = partial_minimize(f, split, FixedBlock::Target, &theta, &nui, &inner)
            .map_err(|source| AoError::InnerSolveFailed { step, source })?
            .argmin;
        let half_value = f.value(&split.assemble(&theta, &nui));
        let theta_prev_scaled = trace
            .theta_scaled_errors
            .last()
            .cloned()
            .unwrap_or_default();
        theta = partial_minimize(f, split, FixedBlock::Nuisance, &nui, &theta, &inner)
            .map_err(|source| AoError::InnerSolveFailed { step, source })?
            .argmin;
        let value = f.value(&split.assemble(&theta, &nui));
        let te = half_tt.dot(&(&theta - &theta_star));
        let ne = half_nn.dot(&(&nui - &nui_star));
        if let Some(ea) = trace.eps_alpha.as_mut() {
            let eps = &te + &p.dot(&ne);
            let alpha = &ne + &p.t().dot(&theta_prev_scaled);
            ea.push((eps, alpha));
        }
        trace.theta_err_norms.push(l2(&te));
        trace.nui_err_norms.push(l2(&ne));
        trace.theta_scaled_errors.push(te);
        trace.theta_iterates.push(theta.clone());
        trace.nui_iterates.push(nui.clone());
        trace.values.push((half_value, value));
    }
    Ok(trace)
}

fn l2(v: &Array1<f64>) -> f64 {
    v.dot(v).sqrt()
}

/// Largest sup-norm deviation from
/// `F_tt^{1/2}(theta_t - theta*) = P P^T F_tt^{1/2}(theta_{t-1} - theta*)`
/// over `steps` rounds of alternating minimization on a quadratic.
pub fn quad_ao_identity_check(
    q: &QuadraticObjective,
    split: &BlockSplit,
    theta0: &Array1<f64>,
    steps: usize,
) -> Result<f64, AoError> {
    let opts = AoOptions {
        inner_tol: 1e-12,
        joint_minimizer: Some(q.minimizer().clone()),
        record_eps_alpha: false,
    };
    let trace = ao_run(q, split, theta0, steps, &opts)?;
    let c = contraction_matrix(&trace.blocks)?;
    let ppt = SymMatrix::from_array_unchecked(c.p.dot(&c.p.t()));
    let dev = trace
        .theta_scaled_errors
        .windows(2)
        .map(|w| sup_norm((&w[1] - &ppt.dot(&w[0])).view()))
        .fold(0.0, f64::max);
    Ok(dev)
}
