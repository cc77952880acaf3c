use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::link::{phi3, sup_abs_phi3};
use super::{BtlError, BtlObjective, ComparisonGraph, PenaltySpec};
use crate::expansions::{ConditionConstants, NormTag, Radii};
use crate::numkit::{BlockSplit, MetricTensor};
use crate::objective::SmoothObjective;
use crate::tol;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstantsMethod {
    /// Per-coordinate suprema on a 1-D grid.
    ExactGrid,
    /// Per-term suprema over the whole interval (grid too large).
    TermEnvelope,
    /// Random points and directions; a lower estimate.
    MonteCarlo,
}

impl ConstantsMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            ConstantsMethod::ExactGrid => "exact_grid",
            ConstantsMethod::TermEnvelope => "term_envelope",
            ConstantsMethod::MonteCarlo => "monte_carlo",
        }
    }
}

/// Constants with the method that produced them. For the l2 norm
/// `envelope` holds guaranteed upper bounds next to the estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct BtlConstants {
    pub constants: ConditionConstants,
    pub envelope: Option<ConditionConstants>,
    pub method: ConstantsMethod,
}

impl BtlConstants {
    /// Upper bounds when available, otherwise the primary constants.
    pub fn upper(&self) -> ConditionConstants {
        self.envelope.unwrap_or(self.constants)
    }
}

/// Third-order constants of the BTL likelihood around `center`.
///
/// `metric` defaults to `D_j^2 = F_jj(center)` including the penalty.
/// With the sup norm, item `j` moves by `|d| <= 2r` with the others at the
/// center. With the l2 norm, `split` selects target and nuisance directions
/// for the mixed constants; without it both range over all coordinates.
pub fn btl_condition_constants(
    graph: &ComparisonGraph,
    penalty: PenaltySpec,
    center: &Array1<f64>,
    radii: Radii,
    metric: Option<&MetricTensor>,
    norm: NormTag,
    split: Option<&BlockSplit>,
    seed: u64,
) -> Result<BtlConstants, BtlError> {
    let n = graph.n();
    if center.len() != n {
        return Err(BtlError::DimensionMismatch {
            expected: n,
            got: center.len(),
        });
    }
    let d = match metric {
        None => {
            let f = BtlObjective::expected(graph, center, penalty)?;
            f.hessian(center).diag().mapv(f64::sqrt)
        }
        Some(MetricTensor::Diagonal(d)) => d.clone(),
        Some(MetricTensor::Full(_)) => return Err(BtlError::NonDiagonalMetric),
    };
    if d.len() != n {
        return Err(BtlError::DimensionMismatch {
            expected: n,
            got: d.len(),
        });
    }
    if let Some(&v) = d.iter().find(|v| !(**v > 0.0)) {
        return Err(BtlError::InvalidParameter {
            name: "metric entry",
            value: v,
        });
    }
    if let Some(s) = split {
        if s.total() != n {
            return Err(BtlError::DimensionMismatch {
                expected: n,
                got: s.total(),
            });
        }
    }
    let build = |t: f64, a: f64, b: f64| ConditionConstants {
        tau3: t,
        d12: a,
        d21: b,
        norm_tag: norm,
        radii,
        kappa: None,
    };
    match norm {
        NormTag::Linf => {
            let (tau3, d12, d21, method) = sup_norm_constants(graph, center, &d, radii.max());
            Ok(BtlConstants {
                constants: build(tau3, d12, d21),
                envelope: None,
                method,
            })
        }
        NormTag::L2 => {
            let radius = block_radii(n, radii, split);
            let c = l2_envelope(graph, center, &d, &radius);
            let (tau3, d12, d21) = l2_monte_carlo(graph, center, &d, &radius, split, seed);
            Ok(BtlConstants {
                constants: build(tau3, d12, d21),
                envelope: Some(build(c, c, c)),
                method: ConstantsMethod::MonteCarlo,
            })
        }
    }
}

fn block_radii(n: usize, radii: Radii, split: Option<&BlockSplit>) -> Vec<f64> {
    match (radii, split) {
        (Radii::Block { theta, nui }, Some(s)) => {
            let mut r = vec![nui; n];
            for &i in s.target() {
                r[i] = theta;
            }
            r
        }
        _ => vec![radii.max(); n],
    }
}

fn sup_norm_constants(
    graph: &ComparisonGraph,
    center: &Array1<f64>,
    d: &Array1<f64>,
    r: f64,
) -> (f64, f64, f64, ConstantsMethod) {
    let (mut tau3, mut d12, mut d21) = (0.0f64, 0.0f64, 0.0f64);
    let half = 2.0 * r;
    let steps = (2.0 * half / tol::GRID_RESOLUTION).ceil() as usize;
    let grid = steps < tol::GRID_MAX_POINTS;
    for j in 0..graph.n() {
        let terms: Vec<(f64, f64, f64)> = graph
            .neighbours(j)
            .iter()
            .map(|&(m, idx)| (graph.edges()[idx].count as f64, center[j] - center[m], d[m]))
            .collect();
        let (mut s0, mut s1, mut s2) = (0.0f64, 0.0f64, 0.0f64);
        if grid {
            let points = steps.max(1);
            for k in 0..=points {
                let shift = if points == 0 || half == 0.0 {
                    0.0
                } else {
                    -half + 2.0 * half * k as f64 / points as f64
                };
                let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
                for &(cnt, delta, dm) in &terms {
                    let w = cnt * phi3(delta + shift).abs();
                    a += w;
                    b += w / dm;
                    c += w / (dm * dm);
                }
                s0 = s0.max(a);
                s1 = s1.max(b);
                s2 = s2.max(c);
            }
        } else {
            for &(cnt, delta, dm) in &terms {
                let w = cnt * sup_abs_phi3(delta - half, delta + half);
                s0 += w;
                s1 += w / dm;
                s2 += w / (dm * dm);
            }
        }
        let dj = d[j];
        tau3 = tau3.max(s0 / (dj * dj * dj));
        d21 = d21.max(s1 / (dj * dj));
        d12 = d12.max(s2 / dj);
    }
    let method = if grid {
        ConstantsMethod::ExactGrid
    } else {
        ConstantsMethod::TermEnvelope
    };
    (tau3, d12, d21, method)
}

/// `max_e (1/D_j + 1/D_m) * max_j [W_j / D_j^2 + sum_m w_jm / (D_j D_m)]`
/// with `w_jm = N_jm sup |phi'''|` over the box `|x_i - c_i| <= r_i / D_i`.
fn l2_envelope(
    graph: &ComparisonGraph,
    center: &Array1<f64>,
    d: &Array1<f64>,
    radius: &[f64],
) -> f64 {
    let n = graph.n();
    let mut kappa = 0.0f64;
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n];
    for e in graph.edges() {
        let (j, m) = (e.j, e.m);
        let spread = radius[j] / d[j] + radius[m] / d[m];
        let delta = center[j] - center[m];
        let w = e.count as f64 * sup_abs_phi3(delta - spread, delta + spread);
        kappa = kappa.max(1.0 / d[j] + 1.0 / d[m]);
        diag[j] += w;
        diag[m] += w;
        off[j] += w / (d[j] * d[m]);
        off[m] += w / (d[j] * d[m]);
    }
    let gersh = (0..n)
        .map(|j| diag[j] / (d[j] * d[j]) + off[j])
        .fold(0.0, f64::max);
    kappa * gersh
}

fn l2_monte_carlo(
    graph: &ComparisonGraph,
    center: &Array1<f64>,
    d: &Array1<f64>,
    radius: &[f64],
    split: Option<&BlockSplit>,
    seed: u64,
) -> (f64, f64, f64) {
    let n = graph.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gauss = |idx: &[usize], rng: &mut ChaCha8Rng| {
        let mut v = Array1::<f64>::zeros(n);
        for &i in idx {
            v[i] = rng.sample::<f64, _>(StandardNormal);
        }
        v
    };
    let all: Vec<usize> = (0..n).collect();
    let (target, nuisance) = match split {
        Some(s) => (s.target().to_vec(), s.nuisance().to_vec()),
        None => (all.clone(), all.clone()),
    };
    let dnorm = |v: &Array1<f64>| (v * d).dot(&(v * d)).sqrt();
    let third = |x: &Array1<f64>, a: &Array1<f64>, b: &Array1<f64>, c: &Array1<f64>| {
        graph
            .edges()
            .iter()
            .map(|e| {
                let (j, m) = (e.j, e.m);
                e.count as f64 * phi3(x[j] - x[m]) * (a[j] - a[m]) * (b[j] - b[m]) * (c[j] - c[m])
            })
            .sum::<f64>()
    };
    let (mut tau3, mut d12, mut d21) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..tol::MC_DIRECTIONS {
        // point in the local ball, per block
        let mut x = center.clone();
        for block in [&target, &nuisance] {
            let u = gauss(block, &mut rng);
            let norm = dnorm(&u);
            if norm > 0.0 {
                let r = radius[block[0]] * rng.random::<f64>();
                for &i in block.iter() {
                    x[i] += u[i] * r / norm;
                }
            }
            if split.is_none() {
                break;
            }
        }
        let w = gauss(&all, &mut rng);
        let g = gauss(&target, &mut rng);
        let z = gauss(&nuisance, &mut rng);
        let (nw, ng, nz) = (dnorm(&w), dnorm(&g), dnorm(&z));
        if nw > 0.0 {
            tau3 = tau3.max(third(&x, &w, &w, &w).abs() / nw.powi(3));
        }
        if ng > 0.0 && nz > 0.0 {
            d21 = d21.max(third(&x, &g, &g, &z).abs() / (ng * ng * nz));
            d12 = d12.max(third(&x, &g, &z, &z).abs() / (ng * nz * nz));
        }
    }
    (tau3, d12, d21)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::btl::{sample_er_graph, Edge, ScoreVector};

    #[test]
    fn zero_radius_at_equal_scores_vanishes() {
        let g = ComparisonGraph::complete(5, 2).unwrap();
        let c = btl_condition_constants(
            &g,
            PenaltySpec::MeanShift(1.0),
            &Array1::zeros(5),
            Radii::Sup(0.0),
            None,
            NormTag::Linf,
            None,
            0,
        )
        .unwrap();
        assert_eq!(
            (c.constants.tau3, c.constants.d12, c.constants.d21),
            (0.0, 0.0, 0.0)
        );
        assert_eq!(c.method, ConstantsMethod::ExactGrid);
    }

    #[test]
    fn two_items_match_dense_grid() {
        let g = ComparisonGraph::new(
            2,
            vec![Edge {
                j: 0,
                m: 1,
                count: 1,
            }],
        )
        .unwrap();
        let r = 0.2;
        let c = btl_condition_constants(
            &g,
            PenaltySpec::None,
            &Array1::zeros(2),
            Radii::Sup(r),
            None,
            NormTag::Linf,
            None,
            0,
        )
        .unwrap();
        let mut best = 0.0f64;
        for k in 0..=100_000 {
            best = best.max(phi3(-2.0 * r + 4.0 * r * k as f64 / 100_000.0).abs());
        }
        let expect = best / 0.25f64.powf(1.5);
        assert!((c.constants.tau3 - expect).abs() <= 1e-9 * expect);
        assert!(c.constants.tau3 <= sup_abs_phi3(-2.0 * r, 2.0 * r) / 0.125 + 1e-15);
    }

    #[test]
    fn monte_carlo_stays_below_envelope() {
        for seed in 0..5u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = sample_er_graph(12, 0.5, 1, &mut rng).unwrap();
            let truth = ScoreVector::sample_uniform(12, 0.0, 2.0, &mut rng).centered();
            let split = BlockSplit::halves(12).unwrap();
            for s in [None, Some(&split)] {
                let c = btl_condition_constants(
                    &g,
                    PenaltySpec::MeanShift(1.0),
                    truth.as_array(),
                    Radii::Block {
                        theta: 0.3,
                        nui: 0.2,
                    },
                    None,
                    NormTag::L2,
                    s,
                    seed,
                )
                .unwrap();
                let env = c.envelope.unwrap();
                assert!(c.constants.tau3 <= env.tau3);
                assert!(c.constants.d12 <= env.d12);
                assert!(c.constants.d21 <= env.d21);
                assert!(c.constants.tau3 > 0.0);
            }
        }
    }
}
