use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::emit::{AoRecord, ExpansionRecord, RhoRecord, StudyRecord};
use super::{ExperimentConfig, ExperimentError, PenaltyKind};
use crate::ao::{
    ao_run, certify_convergence, estimate_rate_with_floor, scaled_diag_metric, AoCertificate,
    AoError, AoOptions, AoTrace,
};
use crate::btl::{
    btl_condition_constants, fit_penalized_mle, noise_gradient, sample_er_graph, sample_outcomes,
    BtlError, BtlObjective, BtlObservation, ComparisonGraph, FitSolver, PenaltySpec, ScoreVector,
    WinsMode,
};
use crate::expansions::{
    check_linear_sup_expansion, delta_row_norm, rho_dual, ConditionConstants, NormTag, Radii,
    SupExpansionCheck,
};
use crate::numkit::{
    l2_norm, psd_power, spd_solve, sup_norm, sym_eig, BlockHessian, BlockSplit, Exponent,
    MetricTensor, SymMatrix,
};
use crate::objective::{newton_minimize, QuadraticObjective, SmoothObjective, SolveOptions};
use crate::tol;

/// SplitMix64 output for state `x`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication `rep` at size `n`; independent of execution order.
pub fn replication_seed(master: u64, n: usize, rep: usize) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(n as u64)) ^ rep as u64)
}

fn tasks(cfg: &ExperimentConfig) -> Vec<(usize, usize)> {
    cfg.n_list
        .iter()
        .flat_map(|&n| (0..cfg.reps).map(move |r| (n, r)))
        .collect()
}

fn run_sorted<R: StudyRecord + Send>(
    cfg: &ExperimentConfig,
    f: impl Fn(usize, usize) -> R + Sync,
) -> Result<Vec<R>, ExperimentError> {
    cfg.validate()?;
    let mut out: Vec<R> = tasks(cfg).into_par_iter().map(|(n, r)| f(n, r)).collect();
    out.sort_by_key(|r| (r.n(), r.rep()));
    Ok(out)
}

/// A sampled design, truth and observation for one replication.
#[derive(Debug, Clone)]
pub struct Replication {
    pub n: usize,
    pub rep: usize,
    pub seed: u64,
    pub graph: ComparisonGraph,
    /// Centered when the penalty is a mean shift, so that it is the minimizer
    /// of the expected penalized likelihood.
    pub truth: Array1<f64>,
    pub obs: BtlObservation,
}

pub fn sample_replication(
    cfg: &ExperimentConfig,
    n: usize,
    rep: usize,
) -> Result<Replication, BtlError> {
    let seed = replication_seed(cfg.seed, n, rep);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graph = sample_er_graph(n, cfg.p_rule.p(n), cfg.l, &mut rng)?;
    let (lo, hi) = cfg.score_range;
    let mut truth = ScoreVector::sample_uniform(n, lo, hi, &mut rng);
    if cfg.penalty == PenaltyKind::MeanShift {
        truth = truth.centered();
    }
    let obs = sample_outcomes(&graph, &truth, &mut rng)?;
    Ok(Replication {
        n,
        rep,
        seed,
        graph,
        truth: truth.into_array(),
        obs,
    })
}

/// Penalized Fisher matrix of the expected likelihood at the truth.
pub fn fisher_at_truth(r: &Replication, penalty: PenaltySpec) -> Result<SymMatrix, BtlError> {
    Ok(BtlObjective::expected(&r.graph, &r.truth, penalty)?.hessian(&r.truth))
}

fn diag_dom_margin(f: &SymMatrix) -> f64 {
    let n = f.dim();
    (0..n)
        .map(|j| {
            f[(j, j)]
                - (0..n)
                    .filter(|&m| m != j)
                    .map(|m| f[(j, m)].abs())
                    .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Both dual-norm values of the penalized Fisher matrix at the truth per
/// replication.
pub fn run_rho_study(cfg: &ExperimentConfig) -> Result<Vec<RhoRecord>, ExperimentError> {
    let penalty = cfg.penalty_spec();
    run_sorted(cfg, |n, rep| {
        let mut rec = RhoRecord {
            study: "rho".into(),
            n,
            rep,
            seed: replication_seed(cfg.seed, n, rep),
            rho_dual: None,
            rho_dual_l2: None,
            connected: false,
            diag_dom_margin: None,
        };
        let Ok(r) = sample_replication(cfg, n, rep) else {
            return rec;
        };
        rec.connected = r.graph.is_connected();
        if let Ok(f) = fisher_at_truth(&r, penalty) {
            if let Ok(d) = MetricTensor::sqrt_diag_of(&f) {
                if let Ok((e, l)) = rho_dual(&f, &d) {
                    rec.rho_dual = Some(e);
                    rec.rho_dual_l2 = Some(l);
                }
            }
            rec.diag_dom_margin = Some(diag_dom_margin(&f));
        }
        rec
    })
}

/// Everything the expansion study measures on one replication.
#[derive(Debug)]
pub struct ExpansionInstance {
    pub replication: Replication,
    /// Minimizer of the expected penalized likelihood.
    pub reference: Array1<f64>,
    /// `A = grad L - grad E L`.
    pub noise: Array1<f64>,
    pub fisher: SymMatrix,
    pub fit: Result<Array1<f64>, BtlError>,
}

pub fn expansion_instance(
    cfg: &ExperimentConfig,
    n: usize,
    rep: usize,
) -> Result<ExpansionInstance, BtlError> {
    let penalty = cfg.penalty_spec();
    let r = sample_replication(cfg, n, rep)?;
    let expected = BtlObjective::expected(&r.graph, &r.truth, penalty)?;
    let reference = if r.graph.is_connected() || matches!(penalty, PenaltySpec::Ridge(_)) {
        newton_minimize(
            &expected,
            &r.truth,
            &SolveOptions::newton().with_tol(tol::REFERENCE_TOL),
        )?
        .argmin
    } else {
        r.truth.clone()
    };
    let noise = noise_gradient(&r.obs, &r.truth)?;
    let fisher = expected.hessian(&reference);
    let fit =
        fit_penalized_mle(&r.obs, penalty, FitSolver::Newton, tol::REFERENCE_TOL).map(|s| s.argmin);
    Ok(ExpansionInstance {
        replication: r,
        reference,
        noise,
        fisher,
        fit,
    })
}

/// Leading terms `|F^{-1} A|_inf`, `|D^{-2} A|_inf` and the remainders of
/// the fitted estimator after subtracting them.
pub fn run_expansion_study(
    cfg: &ExperimentConfig,
) -> Result<Vec<ExpansionRecord>, ExperimentError> {
    run_sorted(cfg, |n, rep| {
        let mut rec = ExpansionRecord {
            study: "expansion".into(),
            n,
            rep,
            seed: replication_seed(cfg.seed, n, rep),
            lead_fish: None,
            lead_diag: None,
            rem_fish: None,
            rem_diag: None,
            converged: false,
        };
        let Ok(inst) = expansion_instance(cfg, n, rep) else {
            return rec;
        };
        let Ok(fa) = spd_solve(&inst.fisher, &inst.noise) else {
            return rec;
        };
        let da = &inst.noise / &inst.fisher.diag();
        rec.lead_fish = Some(sup_norm(fa.view()));
        rec.lead_diag = Some(sup_norm(da.view()));
        if let Ok(fit) = &inst.fit {
            let err = fit - &inst.reference;
            rec.rem_fish = Some(sup_norm((&err + &fa).view()));
            rec.rem_diag = Some(sup_norm((&err + &da).view()));
            rec.converged = true;
        }
        rec
    })
}

/// Sup-norm expansion of the penalized MLE of `obs` around the minimizer
/// of the expected likelihood under `truth`, with `D^2 = diag F` and
/// constants on the sup ball of radius `r_inf` (1 when it is infinite).
pub fn sup_expansion_check(
    obs: &BtlObservation,
    truth: &Array1<f64>,
    penalty: PenaltySpec,
    seed: u64,
) -> Result<(SupExpansionCheck, ConditionConstants), ExperimentError> {
    let expected = BtlObjective::expected(obs.graph(), truth, penalty)?;
    let star = newton_minimize(
        &expected,
        truth,
        &SolveOptions::newton().with_tol(tol::REFERENCE_TOL),
    )?
    .argmin;
    let noise = noise_gradient(obs, truth)?;
    let fish = expected.hessian(&star);
    let d = MetricTensor::sqrt_diag_of(&fish)?;
    let rho = delta_row_norm(&fish, &d)?;
    let a_scaled = sup_norm(d.apply_inv(&noise)?.view());
    let r_inf = if rho < 1.0 {
        std::f64::consts::SQRT_2 * a_scaled / (1.0 - rho)
    } else {
        f64::INFINITY
    };
    let radius = if r_inf.is_finite() { r_inf } else { 1.0 };
    let constants = btl_condition_constants(
        obs.graph(),
        penalty,
        &star,
        Radii::Sup(radius),
        Some(&d),
        NormTag::Linf,
        None,
        seed,
    )?
    .constants;
    let check = check_linear_sup_expansion(&expected, &noise, &constants, Some(&d), Some(&star))?;
    Ok((check, constants))
}

/// Error norms at or below this value are excluded from rate estimates.
pub const AO_RATE_FLOOR: f64 = 1e-9;
/// Slack on the certificate radii over their required values.
pub const RADIUS_SLACK: f64 = 1.1;

/// One traced alternating-minimization run with its certificate.
#[derive(Debug)]
pub struct AoInstance {
    pub replication: Replication,
    pub split: BlockSplit,
    pub trace: AoTrace,
    pub d: MetricTensor,
    pub h: MetricTensor,
    pub certificate: Result<AoCertificate, ExperimentError>,
    pub rate: Result<f64, AoError>,
}

fn certificate_for(
    r: &Replication,
    penalty: PenaltySpec,
    split: &BlockSplit,
    blocks: &BlockHessian,
    joint: &Array1<f64>,
    d: &MetricTensor,
    h: &MetricTensor,
    gap: f64,
    surrogate: bool,
) -> Result<AoCertificate, ExperimentError> {
    let mut full = Array1::zeros(split.total());
    let (dv, hv) = (d.to_matrix().diag(), h.to_matrix().diag());
    for (k, &i) in split.target().iter().enumerate() {
        full[i] = dv[k];
    }
    for (k, &i) in split.nuisance().iter().enumerate() {
        full[i] = hv[k];
    }
    let metric = MetricTensor::diagonal(full)?;
    let (mut rt, mut rn) = (gap, gap);
    let mut cert = None;
    for _ in 0..20 {
        let radii = Radii::Block { theta: rt, nui: rn };
        let constants = if surrogate {
            crate::expansions::ConditionConstants::zero(NormTag::L2, radii)
        } else {
            btl_condition_constants(
                &r.graph,
                penalty,
                joint,
                radii,
                Some(&metric),
                NormTag::L2,
                Some(split),
                r.seed,
            )?
            .upper()
        };
        let c = certify_convergence(blocks, &constants, gap, d, h)?;
        let (want_t, want_n) = (
            RADIUS_SLACK * c.rho2 * c.rho2 * gap,
            RADIUS_SLACK * c.rho2 * gap,
        );
        let done = c.conditions_hold.theta_radius && c.conditions_hold.nui_radius;
        cert = Some(c);
        if done {
            break;
        }
        rt = want_t.max(rt);
        rn = want_n.max(rn);
    }
    Ok(cert.expect("at least one iteration"))
}

/// Runs alternating minimization on one replication from
/// `theta* + ao_gap * direction`, where the direction is a random sign
/// vector, or, for the quadratic surrogate, the top eigenvector of
/// `P P^T` mapped back by `F_tt^{-1/2}` and scaled to sup-norm `ao_gap`.
pub fn ao_instance(
    cfg: &ExperimentConfig,
    n: usize,
    rep: usize,
) -> Result<AoInstance, ExperimentError> {
    let penalty = cfg.penalty_spec();
    let r = sample_replication(cfg, n, rep)?;
    let split = BlockSplit::halves(n)?;
    let joint = fit_penalized_mle(&r.obs, penalty, FitSolver::Newton, tol::REFERENCE_TOL)?.argmin;
    let btl = BtlObjective::new(&r.obs, penalty, WinsMode::Empirical)?;
    let hess = btl.hessian(&joint);
    let blocks = BlockHessian::from_full(&hess, &split)?;
    let theta_star = split.target_part(&joint);
    let direction = if cfg.ao_surrogate {
        let c = crate::numkit::contraction_matrix(&blocks)?;
        let ppt = SymMatrix::from_array_unchecked(c.p.dot(&c.p.t()));
        let eig = sym_eig(&ppt)?;
        let top = (0..eig.values.len())
            .max_by(|&a, &b| eig.values[a].total_cmp(&eig.values[b]))
            .unwrap_or(0);
        psd_power(&blocks.f_tt, Exponent::NegHalf)?.dot(&eig.vectors.column(top).to_owned())
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(r.seed));
        Array1::from_shape_fn(split.p(), |_| {
            if rand::Rng::random::<bool>(&mut rng) {
                1.0
            } else {
                -1.0
            }
        })
    };
    let scale = sup_norm(direction.view());
    let theta0 = &theta_star + &(direction * (cfg.ao_gap / scale.max(f64::MIN_POSITIVE)));
    let opts = AoOptions {
        inner_tol: tol::REFERENCE_TOL,
        joint_minimizer: Some(joint.clone()),
        record_eps_alpha: true,
    };
    let trace = if cfg.ao_surrogate {
        let q = QuadraticObjective::new(joint.clone(), hess.clone())?;
        ao_run(&q, &split, &theta0, cfg.ao_steps, &opts)?
    } else {
        ao_run(&btl, &split, &theta0, cfg.ao_steps, &opts)?
    };
    let d = scaled_diag_metric(&blocks.f_tt)?;
    let h = scaled_diag_metric(&blocks.f_nn).map_err(|e| match e {
        AoError::MetricDominanceViolated { min_eig, .. } => AoError::MetricDominanceViolated {
            block: "nuisance",
            min_eig,
        },
        other => other,
    })?;
    let gap = l2_norm(d.apply(&(&theta0 - &theta_star)).view());
    let certificate = certificate_for(
        &r,
        penalty,
        &split,
        &blocks,
        &joint,
        &d,
        &h,
        gap,
        cfg.ao_surrogate,
    );
    let rate = estimate_rate_with_floor(&trace.theta_err_norms, tol::RATE_BURN_IN, AO_RATE_FLOOR);
    Ok(AoInstance {
        replication: r,
        split,
        trace,
        d,
        h,
        certificate,
        rate,
    })
}

/// Estimated rates and certificates of alternating minimization on
/// penalized BTL objectives split into halves.
pub fn run_ao_study(cfg: &ExperimentConfig) -> Result<Vec<AoRecord>, ExperimentError> {
    run_sorted(cfg, |n, rep| {
        let mut rec = AoRecord {
            study: "ao".into(),
            n,
            rep,
            seed: replication_seed(cfg.seed, n, rep),
            ppt: None,
            rate: None,
            cert_ok: false,
            steps: 0,
        };
        if let Ok(inst) = ao_instance(cfg, n, rep) {
            rec.ppt = Some(inst.trace.ppt_norm);
            rec.rate = inst.rate.ok();
            rec.cert_ok = inst.certificate.as_ref().is_ok_and(|c| c.holds());
            rec.steps = inst.trace.steps();
        }
        rec
    })
}
