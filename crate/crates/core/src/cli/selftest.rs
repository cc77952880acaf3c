use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ao::quad_ao_identity_check;
use crate::btl::{
    sample_er_graph, sample_outcomes, BtlObjective, PenaltySpec, ScoreVector, WinsMode,
};
use crate::expansions::{
    derived_constants, inf_to_one_norm, rho_dual, ConditionConstants, Flavor, NormTag, Radii,
};
use crate::numkit::{finite_diff_check, neumann_sup_bounds, BlockSplit, MetricTensor, SymMatrix};
use crate::objective::QuadraticObjective;

/// Named pass/fail checks with a short detail string.
#[derive(Debug, Clone, PartialEq)]
pub struct SelftestOutcome {
    pub checks: Vec<(&'static str, bool, String)>,
}

impl SelftestOutcome {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.1)
    }
}

fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> SymMatrix {
    let m = Array2::from_shape_fn((n, n), |_| rng.random_range(-1.0..1.0));
    let a = m.dot(&m.t()) + Array2::<f64>::eye(n) * 0.5;
    SymMatrix::new((&a + &a.t()) * 0.5).expect("symmetric by construction")
}

fn quadratic_ao(rng: &mut ChaCha8Rng) -> (bool, String) {
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let n = rng.random_range(2..=8);
        let p = rng.random_range(1..n);
        let f = random_spd(n, rng);
        let min = Array1::from_shape_fn(n, |_| rng.random_range(-1.0..1.0));
        let q = QuadraticObjective::new(min.clone(), f).expect("positive definite");
        let split = BlockSplit::leading(p, n).expect("valid split");
        let theta0 = split.target_part(&min).mapv(|v| v + 1.0);
        match quad_ao_identity_check(&q, &split, &theta0, 5) {
            Ok(d) => worst = worst.max(d),
            Err(e) => return (false, e.to_string()),
        }
    }
    (worst <= 1e-8, format!("max deviation {worst:.2e}"))
}

fn dual_norm_oracle(rng: &mut ChaCha8Rng) -> (bool, String) {
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let n = rng.random_range(2..=8);
        let f = random_spd(n, rng);
        let d = MetricTensor::sqrt_diag_of(&f).expect("positive diagonal");
        let (exact, _) = match rho_dual(&f, &d) {
            Ok(v) => v,
            Err(e) => return (false, e.to_string()),
        };
        let dv = f.diag().mapv(f64::sqrt);
        let brute = (0..n)
            .map(|j| {
                let row = Array2::from_shape_fn((1, n - 1), |(_, k)| {
                    let m = if k < j { k } else { k + 1 };
                    f[(j, m)] / (dv[j] * dv[m])
                });
                inf_to_one_norm(&row)
            })
            .fold(0.0, f64::max);
        worst = worst.max((exact - brute).abs());
    }
    (worst <= 1e-12, format!("max difference {worst:.2e}"))
}

fn btl_derivatives(rng: &mut ChaCha8Rng) -> (bool, String) {
    let mut worst = 0.0f64;
    for n in [3, 6] {
        let g = sample_er_graph(n, 1.0, 3, rng).expect("valid design");
        let truth = ScoreVector::sample_uniform(n, 0.0, 2.0, rng);
        let obs = sample_outcomes(&g, &truth, rng).expect("valid outcomes");
        let f = BtlObjective::new(&obs, PenaltySpec::MeanShift(1.0), WinsMode::Empirical)
            .expect("valid objective");
        let x = Array1::from_shape_fn(n, |_| rng.random_range(-1.0..1.0));
        worst = worst.max(finite_diff_check(&f, &x).max());
    }
    (worst <= 1e-4, format!("max relative error {worst:.2e}"))
}

fn fisher_null_space(rng: &mut ChaCha8Rng) -> (bool, String) {
    let n = 8;
    let g = sample_er_graph(n, 0.6, 2, rng).expect("valid design");
    let truth = ScoreVector::sample_uniform(n, 0.0, 2.0, rng);
    let f = match BtlObjective::expected(&g, truth.as_array(), PenaltySpec::None) {
        Ok(f) => f,
        Err(e) => return (false, e.to_string()),
    };
    let h = f.likelihood_hessian(truth.as_array());
    let r = h
        .dot(&Array1::ones(n))
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    (r <= 1e-10, format!("|F e|_inf = {r:.2e}"))
}

fn inverse_series(rng: &mut ChaCha8Rng) -> (bool, String) {
    let mut fails = 0;
    for _ in 0..100 {
        let n = rng.random_range(2..=6);
        let mut b = Array2::from_shape_fn((n, n), |_| rng.random_range(-1.0..1.0));
        for i in 0..n {
            b[[i, i]] = 0.0;
        }
        let s = crate::numkit::offdiag_row_sum(b.view());
        let target = rng.random_range(0.05..0.95);
        b *= target / s.max(f64::MIN_POSITIVE);
        for i in 0..n {
            b[[i, i]] = 1.0;
        }
        let u = Array1::from_shape_fn(n, |_| rng.random_range(-1.0..1.0));
        match neumann_sup_bounds(b.view(), &u) {
            Ok(r) if r.all_hold() => {}
            _ => fails += 1,
        }
    }
    (fails == 0, format!("{fails} violations in 100 draws"))
}

fn reference_constants() -> (bool, String) {
    let c = ConditionConstants::new(1.0, 1.0, 1.0, NormTag::Linf, Radii::Sup(0.25))
        .expect("valid constants");
    match derived_constants(
        &c,
        Flavor::SupNorm {
            rho_dual: 1.0 - 1.0 / 2f64.sqrt(),
            a_scaled: None,
        },
    ) {
        Ok(d) => {
            let di = d.delta_infty.unwrap_or(f64::NAN);
            let ok = (d.delta_nano - 1.37).abs() <= 0.01 && (di - 12.0).abs() <= 0.1;
            (
                ok,
                format!("delta_nano {:.4}, delta_infty {di:.4}", d.delta_nano),
            )
        }
        Err(e) => (false, e.to_string()),
    }
}

/// Runs the invariant checks on small seeded instances.
pub fn run_selftest(seed: u64) -> SelftestOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    let (ok, d) = quadratic_ao(&mut rng);
    checks.push(("quadratic_ao_identity", ok, d));
    let (ok, d) = dual_norm_oracle(&mut rng);
    checks.push(("dual_norm_oracle", ok, d));
    let (ok, d) = btl_derivatives(&mut rng);
    checks.push(("btl_derivatives", ok, d));
    let (ok, d) = fisher_null_space(&mut rng);
    checks.push(("fisher_null_space", ok, d));
    let (ok, d) = inverse_series(&mut rng);
    checks.push(("inverse_series", ok, d));
    let (ok, d) = reference_constants();
    checks.push(("derived_constants", ok, d));
    SelftestOutcome { checks }
}
