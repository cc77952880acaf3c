use ndarray::{Array1, Array2};

use super::{
    derived_constants, rho_dual, rho_star, ConditionConstants, ExpansionDiagnostics,
    ExpansionError, Flavor, NormTag, PrereqFlags, ResidualReport,
};
use crate::numkit::{
    l2_norm, mat_norm_inf, psd_power, spd_inverse, spd_solve, spectral_norm, sup_norm, sym_eig,
    BlockHessian, BlockSplit, Exponent, MetricTensor, SymMatrix,
};
use crate::objective::{
    linear_perturb, newton_minimize, partial_minimize, separable_perturb, FixedBlock, ScalarTerm,
    SmoothObjective, SolveOptions,
};
use crate::tol;

fn vnorm(tag: NormTag, v: &Array1<f64>) -> f64 {
    match tag {
        NormTag::L2 => l2_norm(v.view()),
        NormTag::Linf => sup_norm(v.view()),
    }
}

fn op_norm(tag: NormTag, m: &Array2<f64>) -> Result<f64, ExpansionError> {
    Ok(match tag {
        NormTag::L2 => spectral_norm(m.view())?,
        NormTag::Linf => mat_norm_inf(m.view()),
    })
}

fn joint_minimizer<F: SmoothObjective + ?Sized>(
    f: &F,
    given: Option<&Array1<f64>>,
) -> Result<Array1<f64>, ExpansionError> {
    match given {
        Some(x) => Ok(x.clone()),
        None => {
            let x0 = Array1::zeros(f.dim());
            Ok(
                newton_minimize(f, &x0, &SolveOptions::newton().with_tol(tol::REFERENCE_TOL))?
                    .argmin,
            )
        }
    }
}

/// `max_j sum_m |delta_jm - F_jm / (D_j D_m)|`, the sup-norm of
/// `I - D^{-1} F D^{-1}`. Equals the exact `rho_dual` when `D_j^2 = F_jj`.
pub fn delta_row_norm(f: &SymMatrix, d: &MetricTensor) -> Result<f64, ExpansionError> {
    let MetricTensor::Diagonal(dv) = d else {
        return Err(ExpansionError::NonDiagonalMetric);
    };
    let n = f.dim();
    if dv.len() != n {
        return Err(ExpansionError::DimensionMismatch {
            expected: n,
            got: dv.len(),
        });
    }
    let mut best = 0.0f64;
    for j in 0..n {
        let s: f64 = (0..n)
            .map(|m| ((j == m) as u8 as f64 - f[(j, m)] / (dv[j] * dv[m])).abs())
            .sum();
        best = best.max(s);
    }
    Ok(best)
}

/// Linear map applied to target-block residuals.
#[derive(Debug, Clone, PartialEq)]
pub enum QMap {
    Identity,
    /// `F_tt^{1/2}`.
    FisherSqrt,
    Matrix(Array2<f64>),
}

/// Inputs shared by the partial-minimization checkers.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialSetup {
    /// Target metric, `D^2 <= F_tt` is checked.
    pub d: MetricTensor,
    /// Nuisance metric.
    pub h: MetricTensor,
    pub norm: NormTag,
    pub q: QMap,
    pub constants: ConditionConstants,
    /// Joint minimizer; solved to `REFERENCE_TOL` when absent.
    pub joint: Option<Array1<f64>>,
    pub tol: f64,
}

impl PartialSetup {
    pub fn new(
        d: MetricTensor,
        h: MetricTensor,
        norm: NormTag,
        constants: ConditionConstants,
    ) -> Self {
        Self {
            d,
            h,
            norm,
            q: QMap::Identity,
            constants,
            joint: None,
            tol: tol::REFERENCE_TOL,
        }
    }

    pub fn with_q(mut self, q: QMap) -> Self {
        self.q = q;
        self
    }

    pub fn with_joint(mut self, joint: Array1<f64>) -> Self {
        self.joint = Some(joint);
        self
    }
}

struct PartialContext {
    theta_star: Array1<f64>,
    nui_star: Array1<f64>,
    blocks: BlockHessian,
    f_inv: SymMatrix,
    q_matrix: Option<Array2<f64>>,
    /// `|Q F^{-1} D|`.
    qfd: f64,
    diag: ExpansionDiagnostics,
}

impl PartialContext {
    fn new<F: SmoothObjective + ?Sized>(
        f: &F,
        split: &BlockSplit,
        s: &PartialSetup,
    ) -> Result<Self, ExpansionError> {
        let joint = joint_minimizer(f, s.joint.as_ref())?;
        let blocks = BlockHessian::from_full(&f.hessian(&joint), split)?;
        if s.d.dim() != split.p() {
            return Err(ExpansionError::DimensionMismatch {
                expected: split.p(),
                got: s.d.dim(),
            });
        }
        let diff =
            SymMatrix::from_array_unchecked(blocks.f_tt.as_array() - s.d.squared().as_array());
        let min_eig = sym_eig(&diff)?.min();
        if min_eig < -1e-12 * blocks.f_tt.norm_inf().max(1.0) {
            return Err(ExpansionError::MetricDominanceViolated { min_eig });
        }
        let f_inv = spd_inverse(&blocks.f_tt)?;
        let q_matrix = match &s.q {
            QMap::Identity => None,
            QMap::FisherSqrt => Some(psd_power(&blocks.f_tt, Exponent::Half)?.into_array()),
            QMap::Matrix(m) => {
                if m.ncols() != split.p() {
                    return Err(ExpansionError::DimensionMismatch {
                        expected: split.p(),
                        got: m.ncols(),
                    });
                }
                Some(m.clone())
            }
        };
        let fd = f_inv.as_array().dot(s.d.to_matrix().as_array());
        let qfd = match &q_matrix {
            None => op_norm(s.norm, &fd)?,
            Some(q) => op_norm(s.norm, &q.dot(&fd))?,
        };
        let (rs, _) = rho_star(&blocks.f_tn, &s.d, &s.h, s.norm)?;
        let diag = derived_constants(
            &s.constants,
            Flavor::Marginal {
                rho_star: rs,
                r_circ: s.constants.radii.max(),
            },
        )?;
        Ok(Self {
            theta_star: split.target_part(&joint),
            nui_star: split.nuisance_part(&joint),
            blocks,
            f_inv,
            q_matrix,
            qfd,
            diag,
        })
    }

    fn q(&self, v: &Array1<f64>) -> Array1<f64> {
        match &self.q_matrix {
            None => v.clone(),
            Some(q) => q.dot(v),
        }
    }

    /// `-F^{-1} F_tn (nu - nu*)`.
    fn bias_lead(&self, dnu: &Array1<f64>) -> Array1<f64> {
        -self.f_inv.dot(&self.blocks.f_tn.dot(dnu))
    }
}

/// Partial-minimization bias against its quadratic bound, plus the
/// value-expansion defect of each partial problem. Reports come in pairs
/// `partial_bias`, `value_defect` per nuisance value.
pub fn check_partial_bias<F: SmoothObjective + ?Sized>(
    f: &F,
    split: &BlockSplit,
    nui_values: &[Array1<f64>],
    setup: &PartialSetup,
) -> Result<Vec<ResidualReport>, ExpansionError> {
    let ctx = PartialContext::new(f, split, setup)?;
    let opts = SolveOptions::newton().with_tol(setup.tol);
    let tau3 = setup.constants.tau3;
    let mut out = Vec::with_capacity(2 * nui_values.len());
    for nu in nui_values {
        let theta_nu =
            partial_minimize(f, split, FixedBlock::Nuisance, nu, &ctx.theta_star, &opts)?.argmin;
        let dnu = nu - &ctx.nui_star;
        let lead = ctx.bias_lead(&dnu);
        let rem = vnorm(setup.norm, &ctx.q(&(&theta_nu - &ctx.theta_star - &lead)));
        let hd = vnorm(setup.norm, &setup.h.apply(&dnu));
        let bound = ctx.qfd * ctx.diag.delta_nano * hd * hd;
        out.push(ResidualReport::new(
            "partial_bias",
            vnorm(setup.norm, &ctx.q(&lead)),
            rem,
            bound,
            None,
        ));

        let at_star = split.assemble(&ctx.theta_star, nu);
        let a_nu = split.target_part(&f.gradient(&at_star));
        let f_nu = BlockHessian::from_full(&f.hessian(&at_star), split)?.f_tt;
        let step = spd_solve(&f_nu, &a_nu)?;
        let quad = a_nu.dot(&step);
        let defect =
            (2.0 * f.value(&split.assemble(&theta_nu, nu)) - 2.0 * f.value(&at_star) + quad).abs();
        let ds = vnorm(setup.norm, &setup.d.apply(&step));
        out.push(ResidualReport::new(
            "value_defect",
            quad,
            defect,
            2.5 * tau3 * ds.powi(3),
            None,
        ));
    }
    Ok(out)
}

/// Partial minimization of `f(theta, nu) + <A, theta>`. Reports come in
/// pairs `perturbed_partial`, `localization` per nuisance value; their
/// `dltwb` flag records `dltwb <= 1/4`, the other two flags are not used
/// and set.
pub fn check_perturbed_partial<F: SmoothObjective + ?Sized>(
    f: &F,
    split: &BlockSplit,
    a: &Array1<f64>,
    nui_values: &[Array1<f64>],
    setup: &PartialSetup,
) -> Result<Vec<ResidualReport>, ExpansionError> {
    if a.len() != split.p() {
        return Err(ExpansionError::DimensionMismatch {
            expected: split.p(),
            got: a.len(),
        });
    }
    let ctx = PartialContext::new(f, split, setup)?;
    let g = linear_perturb(f, split.assemble(a, &Array1::zeros(split.q())))?;
    let opts = SolveOptions::newton().with_tol(setup.tol);
    let c = &setup.constants;
    let dg = &ctx.diag;
    let flags = Some(PrereqFlags {
        dltwb: dg.dltwb <= 0.25,
        d12r: true,
        dinf: true,
    });
    let fa = ctx.f_inv.dot(a);
    let dfa = vnorm(setup.norm, &setup.d.apply(&fa));
    let dia = vnorm(setup.norm, &setup.d.apply_inv(a)?);
    let rho2 = dg.rho2.unwrap_or(0.0);
    let mut out = Vec::with_capacity(2 * nui_values.len());
    for nu in nui_values {
        let theta =
            partial_minimize(&g, split, FixedBlock::Nuisance, nu, &ctx.theta_star, &opts)?.argmin;
        let dnu = nu - &ctx.nui_star;
        let lead = ctx.bias_lead(&dnu) - &fa;
        let rem = vnorm(setup.norm, &ctx.q(&(&theta - &ctx.theta_star - &lead)));
        let hd = vnorm(setup.norm, &setup.h.apply(&dnu));
        let bound = ctx.qfd
            * ((dg.delta_nano + c.d21) * hd * hd + (2.0 * c.tau3 + c.d21 / 2.0) * dfa * dfa);
        out.push(ResidualReport::new(
            "perturbed_partial",
            vnorm(setup.norm, &ctx.q(&lead)),
            rem,
            bound,
            flags,
        ));

        let shift = vnorm(setup.norm, &setup.d.apply(&(&theta - &ctx.theta_star)));
        let loc = rho2 * hd + 1.5 / (1.0 - dg.dltwb) * dia;
        out.push(ResidualReport::new(
            "localization",
            vnorm(setup.norm, &setup.d.apply(&lead)),
            shift,
            loc,
            flags,
        ));
    }
    Ok(out)
}

/// Outcome of a sup-norm expansion check.
#[derive(Debug, Clone, PartialEq)]
pub struct SupExpansionCheck {
    pub rho_dual: f64,
    pub rho_dual_l2: f64,
    /// `|I - D^{-1} F D^{-1}|_inf`, used in the bounds.
    pub delta_norm: f64,
    /// `|D^{-1} A|_inf`.
    pub a_scaled: f64,
    /// `None` when `rho >= 1` or `dltwb >= 1`; bounds are then infinite.
    pub diagnostics: Option<ExpansionDiagnostics>,
    pub perturbed_argmin: Array1<f64>,
    pub reports: Vec<ResidualReport>,
}

impl SupExpansionCheck {
    pub fn report(&self, variant: &str) -> Option<&ResidualReport> {
        self.reports.iter().find(|r| r.variant == variant)
    }
}

struct SupBounds {
    r_inf: f64,
    grad: f64,
    fisher: f64,
    diag: f64,
    diag_delta: f64,
    flags: PrereqFlags,
}

fn sup_bounds(
    constants: &ConditionConstants,
    rho: f64,
    a: f64,
) -> (Option<ExpansionDiagnostics>, SupBounds) {
    match derived_constants(
        constants,
        Flavor::SupNorm {
            rho_dual: rho,
            a_scaled: Some(a),
        },
    ) {
        Ok(d) => {
            let dinf = d.delta_infty.unwrap_or(f64::INFINITY);
            let fisher = dinf * a * a / (1.0 - rho);
            let b = SupBounds {
                r_inf: d.r_infty.unwrap_or(f64::INFINITY),
                grad: dinf * a * a,
                fisher,
                diag: fisher + rho * a / (1.0 - rho),
                diag_delta: fisher + rho * rho * a / (1.0 - rho),
                flags: d.prerequisites_hold.unwrap_or_else(PrereqFlags::none_hold),
            };
            (Some(d), b)
        }
        Err(_) => {
            let inf = f64::INFINITY;
            (
                None,
                SupBounds {
                    r_inf: inf,
                    grad: inf,
                    fisher: inf,
                    diag: inf,
                    diag_delta: inf,
                    flags: PrereqFlags::none_hold(),
                },
            )
        }
    }
}

/// Reports `radius`, `gradient`, `fisher`, `diag` and `diag_delta` for
/// `e = v° - v*` and the shift `m` with `v° - v* ~ -F^{-1} m`.
fn sup_reports(
    f: &SymMatrix,
    d: &MetricTensor,
    e: &Array1<f64>,
    m: &Array1<f64>,
    b: &SupBounds,
) -> Result<Vec<ResidualReport>, ExpansionError> {
    let fl = Some(b.flags);
    let fm = spd_solve(f, m)?;
    let lead = sup_norm(d.apply(&fm).view());
    let de = d.apply(e);
    let dm = d.apply_inv(m)?;
    let grad = sup_norm(d.apply_inv(&(f.dot(e) + m))?.view());
    let fisher = sup_norm(d.apply(&(e + &fm)).view());
    let diag = sup_norm((&de + &dm).view());
    // (I + Delta) u = 2u - D^{-1} F D^{-1} u
    let delta_u = 2.0 * &dm - d.apply_inv(&f.dot(&d.apply_inv(&dm)?))?;
    let diag_delta = sup_norm((&de + &delta_u).view());
    Ok(vec![
        ResidualReport::new("radius", lead, sup_norm(de.view()), b.r_inf, fl),
        ResidualReport::new("gradient", lead, grad, b.grad, fl),
        ResidualReport::new("fisher", lead, fisher, b.fisher, fl),
        ResidualReport::new("diag", lead, diag, b.diag, fl),
        ResidualReport::new("diag_delta", lead, diag_delta, b.diag_delta, fl),
    ])
}

/// Sup-norm expansion of `v° = argmin f + <A, .>` around `v* = argmin f`.
///
/// `d` defaults to `D_j^2 = F_jj(v*)`. Bounds are asserted only when the
/// prerequisite flags hold.
pub fn check_linear_sup_expansion<F: SmoothObjective + ?Sized>(
    f: &F,
    a: &Array1<f64>,
    constants: &ConditionConstants,
    d: Option<&MetricTensor>,
    joint: Option<&Array1<f64>>,
) -> Result<SupExpansionCheck, ExpansionError> {
    if a.len() != f.dim() {
        return Err(ExpansionError::DimensionMismatch {
            expected: f.dim(),
            got: a.len(),
        });
    }
    let star = joint_minimizer(f, joint)?;
    let fish = f.hessian(&star);
    let d = match d {
        Some(d) => d.clone(),
        None => MetricTensor::sqrt_diag_of(&fish)?,
    };
    let (exact, l2) = rho_dual(&fish, &d)?;
    let rho = delta_row_norm(&fish, &d)?;
    let a_scaled = sup_norm(d.apply_inv(a)?.view());
    let g = linear_perturb(f, a.clone())?;
    let pert = newton_minimize(
        &g,
        &star,
        &SolveOptions::newton().with_tol(tol::REFERENCE_TOL),
    )?
    .argmin;
    let (diagnostics, bounds) = sup_bounds(constants, rho, a_scaled);
    let reports = sup_reports(&fish, &d, &(&pert - &star), a, &bounds)?;
    Ok(SupExpansionCheck {
        rho_dual: exact,
        rho_dual_l2: l2,
        delta_norm: rho,
        a_scaled,
        diagnostics,
        perturbed_argmin: pert,
        reports,
    })
}

/// Sup-norm expansion of `v° = argmin f + sum_j t_j(v_j)` around `v*`.
///
/// With `M = (t_j'(v*_j))` and `F = nabla^2 f(v*) + diag t''(v*)` the
/// reports are those of the linear check with `A = M`, plus
/// `gradient_printed` and `fisher_printed`, which flip the sign of `M`.
/// The metric is `D_j^2 = F_jj(v°) + t_j''(v°_j)` from the Hessian of `f`
/// at `v°`.
pub fn check_separable_sup_expansion<F: SmoothObjective + ?Sized>(
    f: &F,
    terms: Vec<Box<dyn ScalarTerm>>,
    constants: &ConditionConstants,
    joint: Option<&Array1<f64>>,
) -> Result<SupExpansionCheck, ExpansionError> {
    let star = joint_minimizer(f, joint)?;
    let g = separable_perturb(f, terms)?;
    let pert = newton_minimize(
        &g,
        &star,
        &SolveOptions::newton().with_tol(tol::REFERENCE_TOL),
    )?
    .argmin;
    let m = g.term_gradient(&star);
    let n = f.dim();
    let mut fish = f.hessian(&star).into_array();
    let curv_star = g.term_curvature(&star);
    for j in 0..n {
        fish[[j, j]] += curv_star[j];
    }
    let fish = SymMatrix::new(fish)?;
    let h_pert = f.hessian(&pert);
    let curv_pert = g.term_curvature(&pert);
    let dv = Array1::from_shape_fn(n, |j| (h_pert[(j, j)] + curv_pert[j]).sqrt());
    let d = MetricTensor::diagonal(dv)?;
    let (exact, l2) = rho_dual(&fish, &d)?;
    let rho = delta_row_norm(&fish, &d)?;
    let a_scaled = sup_norm(d.apply_inv(&m)?.view());
    let (diagnostics, bounds) = sup_bounds(constants, rho, a_scaled);
    let e = &pert - &star;
    let mut reports = sup_reports(&fish, &d, &e, &m, &bounds)?;
    let fm = spd_solve(&fish, &m)?;
    let lead = sup_norm(d.apply(&fm).view());
    let fl = Some(bounds.flags);
    let gp = sup_norm(d.apply_inv(&(fish.dot(&e) - &m))?.view());
    let fp = sup_norm(d.apply(&(&e - &fm)).view());
    reports.push(ResidualReport::new(
        "gradient_printed",
        lead,
        gp,
        bounds.grad,
        fl,
    ));
    reports.push(ResidualReport::new(
        "fisher_printed",
        lead,
        fp,
        bounds.fisher,
        fl,
    ));
    Ok(SupExpansionCheck {
        rho_dual: exact,
        rho_dual_l2: l2,
        delta_norm: rho,
        a_scaled,
        diagnostics,
        perturbed_argmin: pert,
        reports,
    })
}

/// Cross-derivative size against partial-minimization bias over a probe set.
#[derive(Debug, Clone, PartialEq)]
pub struct SemiOrthoReport {
    /// `max_nu |nabla_nu nabla_theta f(theta*, nu)|_inf`.
    pub max_cross: f64,
    /// `max_nu |D (theta_nu - theta*)|`.
    pub max_bias: f64,
    pub biases: Vec<f64>,
    pub cross_near_zero: bool,
    pub bias_near_zero: bool,
}

impl SemiOrthoReport {
    /// A vanishing cross derivative comes with a vanishing bias.
    pub fn consistent(&self) -> bool {
        !self.cross_near_zero || self.bias_near_zero
    }
}

/// Threshold for "near zero" in the semi-orthogonality probe.
pub const NEAR_ZERO: f64 = 1e-9;

pub fn semi_orthogonality_probe<F: SmoothObjective + ?Sized>(
    f: &F,
    split: &BlockSplit,
    nui_values: &[Array1<f64>],
    d: &MetricTensor,
    norm: NormTag,
    joint: Option<&Array1<f64>>,
) -> Result<SemiOrthoReport, ExpansionError> {
    let joint = joint_minimizer(f, joint)?;
    let theta_star = split.target_part(&joint);
    let opts = SolveOptions::newton().with_tol(tol::REFERENCE_TOL);
    let mut max_cross = 0.0f64;
    let mut biases = Vec::with_capacity(nui_values.len());
    for nu in nui_values {
        let x = split.assemble(&theta_star, nu);
        let bh = BlockHessian::from_full(&f.hessian(&x), split)?;
        max_cross = max_cross.max(mat_norm_inf(bh.f_tn.view()));
        let theta_nu =
            partial_minimize(f, split, FixedBlock::Nuisance, nu, &theta_star, &opts)?.argmin;
        biases.push(vnorm(norm, &d.apply(&(&theta_nu - &theta_star))));
    }
    let max_bias = biases.iter().copied().fold(0.0, f64::max);
    Ok(SemiOrthoReport {
        max_cross,
        max_bias,
        biases,
        cross_near_zero: max_cross <= NEAR_ZERO,
        bias_near_zero: max_bias <= NEAR_ZERO,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansions::Radii;
    use crate::objective::{QuadraticObjective, Ridge, ZeroTerm};
    use ndarray::array;

    fn coupled() -> QuadraticObjective {
        let f = SymMatrix::new(array![
            [4.0, 0.5, 0.3, 0.2],
            [0.5, 3.0, 0.1, 0.4],
            [0.3, 0.1, 5.0, 0.6],
            [0.2, 0.4, 0.6, 4.0]
        ])
        .unwrap();
        QuadraticObjective::new(array![0.5, -1.0, 2.0, 0.3], f).unwrap()
    }

    fn setup(q: &QuadraticObjective, split: &BlockSplit) -> PartialSetup {
        let bh = BlockHessian::from_full(q.curvature(), split).unwrap();
        let d = crate::ao::scaled_diag_metric(&bh.f_tt).unwrap();
        let h = crate::ao::scaled_diag_metric(&bh.f_nn).unwrap();
        PartialSetup::new(
            d,
            h,
            NormTag::L2,
            ConditionConstants::zero(NormTag::L2, Radii::Circ(1.0)),
        )
    }

    #[test]
    fn quadratic_partial_bias_is_exact() {
        let q = coupled();
        let split = BlockSplit::leading(2, 4).unwrap();
        let nus = vec![array![2.5, 0.0], array![1.0, 1.0]];
        for qmap in [QMap::Identity, QMap::FisherSqrt] {
            let r = check_partial_bias(&q, &split, &nus, &setup(&q, &split).with_q(qmap)).unwrap();
            assert_eq!(r.len(), 4);
            for rep in &r {
                assert!(rep.remainder_norm <= 1e-9, "{rep:?}");
                assert_eq!(rep.bound_value, 0.0);
            }
            assert!(r[0].leading_term_norm > 0.01);
        }
    }

    #[test]
    fn perturbed_partial_with_zero_shift_matches_bias() {
        let q = coupled();
        let split = BlockSplit::leading(2, 4).unwrap();
        let nus = vec![array![2.5, 0.0]];
        let s = setup(&q, &split);
        let a = check_perturbed_partial(&q, &split, &array![0.0, 0.0], &nus, &s).unwrap();
        let b = check_partial_bias(&q, &split, &nus, &s).unwrap();
        assert!((a[0].leading_term_norm - b[0].leading_term_norm).abs() < 1e-12);
        assert!((a[0].remainder_norm - b[0].remainder_norm).abs() < 1e-9);
        let a = check_perturbed_partial(&q, &split, &array![0.3, -0.2], &nus, &s).unwrap();
        assert!(a[0].remainder_norm <= 1e-9);
        assert!(a[1].bound_holds, "{:?}", a[1]);
    }

    #[test]
    fn metric_dominance_checked() {
        let q = coupled();
        let split = BlockSplit::leading(2, 4).unwrap();
        let mut s = setup(&q, &split);
        s.d = MetricTensor::diagonal(array![3.0, 3.0]).unwrap();
        assert!(matches!(
            check_partial_bias(&q, &split, &[array![0.0, 0.0]], &s),
            Err(ExpansionError::MetricDominanceViolated { .. })
        ));
    }

    #[test]
    fn linear_sup_quadratic_and_zero_shift() {
        let q = coupled();
        let c = ConditionConstants::zero(NormTag::Linf, Radii::Sup(1.0));
        let r =
            check_linear_sup_expansion(&q, &array![0.1, -0.2, 0.05, 0.0], &c, None, None).unwrap();
        assert!(r.report("gradient").unwrap().remainder_norm < 1e-10);
        assert!(r.report("fisher").unwrap().remainder_norm < 1e-10);
        assert!(r.diagnostics.is_some());
        assert!(r.report("radius").unwrap().bound_holds);
        assert!(r.report("diag").unwrap().bound_holds);
        let z = check_linear_sup_expansion(&q, &Array1::zeros(4), &c, None, None).unwrap();
        assert!(z.reports.iter().all(|r| r.remainder_norm < 1e-12));
    }

    #[test]
    fn separable_ridge_closed_form() {
        let q = coupled();
        let c = ConditionConstants::zero(NormTag::Linf, Radii::Sup(1.0));
        let lam = 0.2;
        let terms: Vec<Box<dyn ScalarTerm>> = (0..4)
            .map(|_| Box::new(Ridge(lam)) as Box<dyn ScalarTerm>)
            .collect();
        let r = check_separable_sup_expansion(&q, terms, &c, None).unwrap();
        let shifted =
            SymMatrix::new(q.curvature().as_array() + &(Array2::<f64>::eye(4) * lam)).unwrap();
        let oracle = spd_solve(&shifted, &q.curvature().dot(q.minimizer())).unwrap();
        assert!((&r.perturbed_argmin - &oracle)
            .iter()
            .all(|v| v.abs() < 1e-10));
        assert!(r.report("fisher").unwrap().remainder_norm < 1e-10);
        assert!(r.report("fisher_printed").unwrap().remainder_norm > 0.01);

        let zero: Vec<Box<dyn ScalarTerm>> = (0..4)
            .map(|_| Box::new(ZeroTerm) as Box<dyn ScalarTerm>)
            .collect();
        let z = check_separable_sup_expansion(&q, zero, &c, None).unwrap();
        assert!(z.reports.iter().all(|r| r.remainder_norm < 1e-12));
    }

    #[test]
    fn delta_norm_equals_rho_dual_on_diagonal_metric() {
        let q = coupled();
        let d = MetricTensor::sqrt_diag_of(q.curvature()).unwrap();
        let (e, _) = rho_dual(q.curvature(), &d).unwrap();
        assert!((delta_row_norm(q.curvature(), &d).unwrap() - e).abs() < 1e-15);
    }

    #[test]
    fn semi_orthogonality_cases() {
        let split = BlockSplit::leading(2, 4).unwrap();
        let sep = QuadraticObjective::new(
            array![1.0, 2.0, 3.0, 4.0],
            SymMatrix::from_diag(&[1.0, 2.0, 3.0, 4.0]),
        )
        .unwrap();
        let d = MetricTensor::diagonal(array![1.0, 1.0]).unwrap();
        let nus = vec![array![0.0, 0.0], array![5.0, -1.0]];
        let r = semi_orthogonality_probe(&sep, &split, &nus, &d, NormTag::L2, None).unwrap();
        assert!(r.max_cross <= 1e-9 && r.max_bias <= 1e-9 && r.consistent());

        let q = coupled();
        let r = semi_orthogonality_probe(&q, &split, &nus, &d, NormTag::L2, None).unwrap();
        let bh = BlockHessian::from_full(q.curvature(), &split).unwrap();
        for (nu, b) in nus.iter().zip(&r.biases) {
            let dnu = nu - &array![2.0, 0.3];
            let want = l2_norm(spd_solve(&bh.f_tt, &bh.f_tn.dot(&dnu)).unwrap().view());
            assert!((b - want).abs() < 1e-10);
        }
        assert!(!r.cross_near_zero);
    }
}
