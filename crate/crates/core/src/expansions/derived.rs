use ndarray::{Array1, Array2};

use super::{ConditionConstants, ExpansionError, NormTag};
use crate::numkit::{spectral_norm, MetricTensor, SymMatrix};

/// Off-diagonal coupling of `D^{-1} F D^{-1}`: the exact dual-norm value
/// `max_j sum_{m != j} |F_jm| / (D_j D_m)` and the root-sum-of-squares
/// variant `max_j sqrt(sum_{m != j} F_jm^2 / (D_j D_m)^2)`.
pub fn rho_dual(f: &SymMatrix, d: &MetricTensor) -> Result<(f64, f64), ExpansionError> {
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
    let a = f.as_array();
    let mut exact = 0.0f64;
    let mut l2 = 0.0f64;
    for j in 0..n {
        let (mut s1, mut s2) = (0.0, 0.0);
        for m in 0..n {
            if m != j {
                let v = a[[j, m]] / (dv[j] * dv[m]);
                s1 += v.abs();
                s2 += v * v;
            }
        }
        exact = exact.max(s1);
        l2 = l2.max(s2.sqrt());
    }
    Ok((exact, l2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhoStarMethod {
    Spectral,
    SignVectors,
    /// Sum of absolute column sums, an upper bound used for large blocks.
    ColumnSumRelaxation,
}

impl RhoStarMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            RhoStarMethod::Spectral => "spectral",
            RhoStarMethod::SignVectors => "sign_vectors",
            RhoStarMethod::ColumnSumRelaxation => "column_sum_relaxation",
        }
    }
}

/// Largest nuisance block for exhaustive sign-vector search.
pub const SIGN_VECTOR_MAX_Q: usize = 20;

/// `|D^{-1} F_tn H^{-1}|` from the nuisance unit ball: the spectral norm for
/// l2; for the sup norm `max_{z in {-1,1}^q} |M z|_1`.
pub fn rho_star(
    f_tn: &Array2<f64>,
    d: &MetricTensor,
    h: &MetricTensor,
    norm: NormTag,
) -> Result<(f64, RhoStarMethod), ExpansionError> {
    let (p, q) = f_tn.dim();
    if d.dim() != p {
        return Err(ExpansionError::DimensionMismatch {
            expected: p,
            got: d.dim(),
        });
    }
    if h.dim() != q {
        return Err(ExpansionError::DimensionMismatch {
            expected: q,
            got: h.dim(),
        });
    }
    let m = d
        .inverse_matrix()?
        .as_array()
        .dot(f_tn)
        .dot(h.inverse_matrix()?.as_array());
    match norm {
        NormTag::L2 => Ok((spectral_norm(m.view())?, RhoStarMethod::Spectral)),
        NormTag::Linf if q <= SIGN_VECTOR_MAX_Q => {
            Ok((inf_to_one_norm(&m), RhoStarMethod::SignVectors))
        }
        NormTag::Linf => Ok((
            m.iter().map(|v| v.abs()).sum(),
            RhoStarMethod::ColumnSumRelaxation,
        )),
    }
}

/// `max_{z in {-1,1}^q} |M z|_1` by enumeration (a Gray-code walk).
pub fn inf_to_one_norm(m: &Array2<f64>) -> f64 {
    let (p, q) = m.dim();
    if q == 0 || p == 0 {
        return 0.0;
    }
    let mut z = vec![1.0; q];
    let mut v: Array1<f64> = m.sum_axis(ndarray::Axis(1));
    let mut best = v.iter().map(|x| x.abs()).sum::<f64>();
    for k in 1u64..(1u64 << q) {
        let bit = k.trailing_zeros() as usize;
        z[bit] = -z[bit];
        let col = m.column(bit);
        v.scaled_add(2.0 * z[bit], &col);
        best = best.max(v.iter().map(|x| x.abs()).sum());
    }
    best
}

/// Which bound the derived constants serve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Flavor {
    /// Sup-norm expansion of a linear perturbation. `a_scaled` is
    /// `|D^{-1} A|_inf`; when absent, `r_inf` is taken from the radii.
    SupNorm {
        rho_dual: f64,
        a_scaled: Option<f64>,
    },
    /// Partial minimization with the nuisance in a ball of radius `r_circ`.
    Marginal { rho_star: f64, r_circ: f64 },
    /// Alternating minimization with cross norm `|D^{-1} F_tn H^{-1}|`.
    Ao { cross: f64 },
}

/// Prerequisites of the sup-norm expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrereqFlags {
    /// `dltwb <= 1/4`
    pub dltwb: bool,
    /// `d12 r_inf <= 1/4`
    pub d12r: bool,
    /// `delta_inf |D^{-1} A|_inf <= sqrt 2 - 1`
    pub dinf: bool,
}

impl PrereqFlags {
    pub fn all(&self) -> bool {
        self.dltwb && self.d12r && self.dinf
    }

    pub fn none_hold() -> Self {
        Self {
            dltwb: false,
            d12r: false,
            dinf: false,
        }
    }
}

/// Scalars combining the condition constants into remainder bounds. Fields
/// that a flavor does not define are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionDiagnostics {
    pub rho_dual: Option<f64>,
    pub rho_dual_l2: Option<f64>,
    pub rho_star: Option<f64>,
    pub rho2: Option<f64>,
    pub dltwb: f64,
    pub delta_nano: f64,
    pub delta_infty: Option<f64>,
    pub r_infty: Option<f64>,
    pub prerequisites_hold: Option<PrereqFlags>,
}

impl ExpansionDiagnostics {
    /// Named scalar values, for export.
    pub fn entries(&self) -> Vec<(&'static str, Option<f64>)> {
        vec![
            ("rho_dual", self.rho_dual),
            ("rho_dual_l2", self.rho_dual_l2),
            ("rho_star", self.rho_star),
            ("rho2", self.rho2),
            ("dltwb", Some(self.dltwb)),
            ("delta_nano", Some(self.delta_nano)),
            ("delta_infty", self.delta_infty),
            ("r_infty", self.r_infty),
        ]
    }
}

/// Derived constants of one flavor of the expansion bounds.
pub fn derived_constants(
    c: &ConditionConstants,
    flavor: Flavor,
) -> Result<ExpansionDiagnostics, ExpansionError> {
    let (tau3, d12, d21) = (c.tau3, c.d12, c.d21);
    match flavor {
        Flavor::SupNorm { rho_dual, a_scaled } => {
            if !(rho_dual < 1.0) {
                return Err(ExpansionError::DltwbTooLarge(f64::INFINITY));
            }
            let root2 = std::f64::consts::SQRT_2;
            let (r_inf, a) = match a_scaled {
                Some(a) => (root2 * a / (1.0 - rho_dual), a),
                None => {
                    let r = c.radii.max();
                    (r, r * (1.0 - rho_dual) / root2)
                }
            };
            let dltwb = d21 * r_inf;
            if !(dltwb < 1.0) {
                return Err(ExpansionError::DltwbTooLarge(dltwb));
            }
            let s = rho_dual + dltwb / 2.0;
            let delta_nano =
                (rho_dual * d21 + d12 / 2.0 + 3.0 * s * s * tau3 / (4.0 * (1.0 - dltwb).powi(2)))
                    / (1.0 - dltwb);
            let delta_infty =
                2.0 * tau3 + d21 / 2.0 + 2.0 * (delta_nano + d21) / (1.0 - rho_dual).powi(2);
            let flags = PrereqFlags {
                dltwb: dltwb <= 0.25,
                d12r: d12 * r_inf <= 0.25,
                dinf: delta_infty * a <= root2 - 1.0,
            };
            Ok(ExpansionDiagnostics {
                rho_dual: Some(rho_dual),
                rho_dual_l2: None,
                rho_star: None,
                rho2: None,
                dltwb,
                delta_nano,
                delta_infty: Some(delta_infty),
                r_infty: Some(r_inf),
                prerequisites_hold: Some(flags),
            })
        }
        Flavor::Marginal { rho_star, r_circ } => {
            let dltwb = d12 * r_circ;
            if !(dltwb < 1.0) {
                return Err(ExpansionError::DltwbTooLarge(dltwb));
            }
            let rho2 = 1.5 / (1.0 - dltwb) * (rho_star + d12 * r_circ / 2.0);
            let delta_nano =
                (rho_star * d21 + d12 / 2.0 + rho2 * rho2 * tau3 / 3.0) / (1.0 - dltwb);
            Ok(ExpansionDiagnostics {
                rho_dual: None,
                rho_dual_l2: None,
                rho_star: Some(rho_star),
                rho2: Some(rho2),
                dltwb,
                delta_nano,
                delta_infty: None,
                r_infty: None,
                prerequisites_hold: None,
            })
        }
        Flavor::Ao { cross } => {
            let dm = c.d_max();
            let dltwb = dm * c.radii.max();
            if !(dltwb < 1.0) {
                return Err(ExpansionError::DltwbTooLarge(dltwb));
            }
            let rho2 = 1.5 / (1.0 - dltwb) * (cross + dltwb / 2.0);
            let delta_nano = (dm * cross + dm / 2.0 + tau3 * rho2 * rho2 / 3.0) / (1.0 - dltwb);
            Ok(ExpansionDiagnostics {
                rho_dual: None,
                rho_dual_l2: None,
                rho_star: Some(cross),
                rho2: Some(rho2),
                dltwb,
                delta_nano,
                delta_infty: None,
                r_infty: None,
                prerequisites_hold: None,
            })
        }
    }
}
