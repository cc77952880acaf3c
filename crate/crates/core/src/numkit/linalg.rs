use ndarray::{Array1, Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BlockHessian, NumError, SymMatrix};
use crate::tol;

/// Lower-triangular Cholesky factor `A = L L^T`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    // row-major lower triangle
    l: Vec<f64>,
}

impl Cholesky {
    pub fn new(a: &SymMatrix) -> Result<Self, NumError> {
        let n = a.dim();
        let src = a.as_array();
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = src[[j, j]];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > 0.0) {
                return Err(NumError::NotPositiveDefinite { pivot: j, value: d });
            }
            let djj = d.sqrt();
            l[j * n + j] = djj;
            for i in (j + 1)..n {
                let mut s = src[[i, j]];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / djj;
            }
        }
        Ok(Self { n, l })
    }

    pub fn solve(&self, b: &Array1<f64>) -> Result<Array1<f64>, NumError> {
        let n = self.n;
        if b.len() != n {
            return Err(NumError::DimensionMismatch {
                expected: n,
                got: b.len(),
            });
        }
        let mut y = b.to_vec();
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            let s = y[i] - row.iter().zip(&y[..i]).map(|(a, b)| a * b).sum::<f64>();
            y[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for (k, yk) in y.iter().enumerate().skip(i + 1) {
                s -= self.l[k * n + i] * yk;
            }
            y[i] = s / self.l[i * n + i];
        }
        Ok(Array1::from(y))
    }

    /// Smallest diagonal entry of the factor; zero-free iff `A` is PD.
    pub fn min_pivot(&self) -> f64 {
        (0..self.n)
            .map(|i| self.l[i * self.n + i])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Solves `A x = b` for positive definite `A`.
pub fn spd_solve(a: &SymMatrix, b: &Array1<f64>) -> Result<Array1<f64>, NumError> {
    Cholesky::new(a)?.solve(b)
}

pub fn spd_inverse(a: &SymMatrix) -> Result<SymMatrix, NumError> {
    let n = a.dim();
    let chol = Cholesky::new(a)?;
    let mut inv = Array2::zeros((n, n));
    for j in 0..n {
        let mut e = Array1::zeros(n);
        e[j] = 1.0;
        inv.column_mut(j).assign(&chol.solve(&e)?);
    }
    // symmetrize rounding
    let sym = (&inv + &inv.t()) * 0.5;
    Ok(SymMatrix::from_array_unchecked(sym))
}

/// Gaussian elimination with partial pivoting for a general square system.
pub fn lu_solve(a: ArrayView2<f64>, b: &Array1<f64>) -> Result<Array1<f64>, NumError> {
    let (rows, cols) = a.dim();
    if rows != cols || rows == 0 {
        return Err(NumError::BadShape { rows, cols });
    }
    if b.len() != rows {
        return Err(NumError::DimensionMismatch {
            expected: rows,
            got: b.len(),
        });
    }
    let n = rows;
    let mut m: Vec<f64> = a.iter().copied().collect();
    let mut x = b.to_vec();
    for col in 0..n {
        let (piv, pval) =
            (col..n)
                .map(|r| (r, m[r * n + col].abs()))
                .fold(
                    (col, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
        if !(pval > 0.0) {
            return Err(NumError::SingularMatrix { eigenvalue: 0.0 });
        }
        if piv != col {
            for k in 0..n {
                m.swap(col * n + k, piv * n + k);
            }
            x.swap(col, piv);
        }
        let d = m[col * n + col];
        for r in (col + 1)..n {
            let f = m[r * n + col] / d;
            if f != 0.0 {
                for k in col..n {
                    m[r * n + k] -= f * m[col * n + k];
                }
                x[r] -= f * x[col];
            }
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in (i + 1)..n {
            s -= m[i * n + k] * x[k];
        }
        x[i] = s / m[i * n + i];
    }
    Ok(Array1::from(x))
}

/// Eigen-decomposition `A = V diag(values) V^T`, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Array1<f64>,
    /// Orthonormal eigenvectors stored as columns.
    pub vectors: Array2<f64>,
}

impl SymEigen {
    pub fn reconstruct_with(&self, g: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.values.len();
        let v = &self.vectors;
        let mapped: Vec<f64> = self.values.iter().map(|&l| g(l)).collect();
        SymMatrix::from_upper(n, |i, j| {
            (0..n).map(|k| v[[i, k]] * mapped[k] * v[[j, k]]).sum()
        })
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix.
pub fn sym_eig(a: &SymMatrix) -> Result<SymEigen, NumError> {
    let n = a.dim();
    let mut m: Vec<f64> = a.as_array().iter().copied().collect();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let fro = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    let off = |m: &[f64]| {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += m[i * n + j] * m[i * n + j];
            }
        }
        (2.0 * s).sqrt()
    };
    let mut converged = fro == 0.0 || off(&m) <= tol::JACOBI_OFFDIAG_REL * fro;
    let mut sweeps = 0;
    while !converged {
        if sweeps == tol::JACOBI_MAX_SWEEPS {
            return Err(NumError::NoConvergence {
                what: "Jacobi eigen-decomposition",
                iterations: sweeps,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
        converged = off(&m) <= tol::JACOBI_OFFDIAG_REL * fro;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].total_cmp(&m[j * n + j]));
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let vectors = Array2::from_shape_fn((n, n), |(r, c)| v[r * n + order[c]]);
    Ok(SymEigen { values, vectors })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exponent {
    Half,
    NegHalf,
    NegOne,
}

/// `A^e` through the eigen-decomposition.
pub fn psd_power(a: &SymMatrix, exponent: Exponent) -> Result<SymMatrix, NumError> {
    let eig = sym_eig(a)?;
    let scale = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = tol::PSD_SINGULAR_REL * scale;
    match exponent {
        Exponent::Half => {
            if eig.min() < -floor {
                return Err(NumError::NotPositiveDefinite {
                    pivot: 0,
                    value: eig.min(),
                });
            }
            Ok(eig.reconstruct_with(|l| l.max(0.0).sqrt()))
        }
        Exponent::NegHalf | Exponent::NegOne => {
            if !(eig.min() > floor) {
                return Err(NumError::SingularMatrix {
                    eigenvalue: eig.min(),
                });
            }
            if exponent == Exponent::NegHalf {
                Ok(eig.reconstruct_with(|l| 1.0 / l.sqrt()))
            } else {
                Ok(eig.reconstruct_with(|l| 1.0 / l))
            }
        }
    }
}

const POWER_SEED: u64 = 0x5eed_0f70_77e2;

/// Largest singular value by power iteration on `M^T M`.
pub fn spectral_norm(m: ArrayView2<f64>) -> Result<f64, NumError> {
    spectral_norm_seeded(m, POWER_SEED)
}

pub fn spectral_norm_seeded(m: ArrayView2<f64>, seed: u64) -> Result<f64, NumError> {
    let (rows, cols) = m.dim();
    if rows == 0 || cols == 0 {
        return Ok(0.0);
    }
    let gram = m.t().dot(&m);
    if gram.iter().all(|v| *v == 0.0) {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Array1<f64> = (0..cols).map(|_| rng.random_range(-1.0..1.0)).collect();
    x /= x.dot(&x).sqrt();
    let cap = 10 * rows.max(cols) + 100;
    let mut lambda = f64::NAN;
    for _ in 0..cap {
        let y = gram.dot(&x);
        let next = x.dot(&y);
        let ny = y.dot(&y).sqrt();
        if ny == 0.0 {
            // start vector in the kernel; restart along the largest gram column
            let j = (0..cols)
                .max_by(|&a, &b| gram[[a, a]].total_cmp(&gram[[b, b]]))
                .unwrap_or(0);
            x = gram.column(j).to_owned();
            x /= x.dot(&x).sqrt();
            continue;
        }
        x = y / ny;
        if (next - lambda).abs() <= tol::POWER_ITER_REL * next.abs() {
            // Rayleigh quotient at the refreshed vector
            let rq = x.dot(&gram.dot(&x));
            return Ok(rq.max(next).max(0.0).sqrt());
        }
        lambda = next;
    }
    // clustered top spectrum: fall back to the full eigendecomposition
    let eig = sym_eig(&SymMatrix::from_array_unchecked((&gram + &gram.t()) * 0.5))?;
    Ok(eig.max().max(0.0).sqrt())
}

/// Normalized cross-curvature `P = F_tt^{-1/2} F_tn F_nn^{-1/2}` and `|P P^T|`.
#[derive(Debug, Clone)]
pub struct Contraction {
    pub p: Array2<f64>,
    pub ppt_norm: f64,
    /// `false` when `|P P^T| >= 1`, i.e. no linear-rate certificate exists.
    pub certifiable: bool,
}

pub fn contraction_matrix(bh: &BlockHessian) -> Result<Contraction, NumError> {
    let wrap = |e: NumError| NumError::SingularBlock(Box::new(e));
    let tt = psd_power(&bh.f_tt, Exponent::NegHalf).map_err(wrap)?;
    let nn = psd_power(&bh.f_nn, Exponent::NegHalf).map_err(wrap)?;
    let p = tt.as_array().dot(&bh.f_tn).dot(nn.as_array());
    let s = spectral_norm(p.view())?;
    let ppt_norm = s * s;
    Ok(Contraction {
        p,
        ppt_norm,
        certifiable: ppt_norm < 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn random_spd(n: usize, seed: u64) -> SymMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = Array2::from_shape_fn((n, n), |_| rng.random_range(-1.0..1.0));
        let mut a = b.t().dot(&b);
        for i in 0..n {
            a[[i, i]] += 0.5;
        }
        SymMatrix::new(a).unwrap()
    }

    #[test]
    fn spd_solve_small_cases() {
        let x = spd_solve(&SymMatrix::identity(2), &array![3.0, 4.0]).unwrap();
        assert_eq!(x, array![3.0, 4.0]);
        let a = SymMatrix::new(array![[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let x = spd_solve(&a, &array![3.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn spd_solve_rejects_indefinite() {
        let a = SymMatrix::new(array![[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert!(matches!(
            spd_solve(&a, &array![1.0, 1.0]),
            Err(NumError::NotPositiveDefinite { pivot: 1, .. })
        ));
    }

    #[test]
    fn symmetric_check() {
        assert!(matches!(
            SymMatrix::new(array![[1.0, 2.0], [2.1, 1.0]]),
            Err(NumError::NotSymmetric { .. })
        ));
        assert!(matches!(
            SymMatrix::new(Array2::zeros((0, 0))),
            Err(NumError::BadShape { .. })
        ));
    }

    #[test]
    fn eig_diag_and_rank_one() {
        let e = sym_eig(&SymMatrix::from_diag(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.values.to_vec(), vec![1.0, 2.0, 3.0]);
        for c in 0..3 {
            let col = e.vectors.column(c);
            assert_eq!(col.iter().filter(|v| v.abs() == 1.0).count(), 1);
        }
        let a = SymMatrix::new(array![[0.25, -0.25], [-0.25, 0.25]]).unwrap();
        let e = sym_eig(&a).unwrap();
        assert!(e.values[0].abs() < 1e-15);
        assert!((e.values[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn eig_trace_and_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = Array2::from_shape_fn((6, 6), |_| rng.random_range(-1.0..1.0));
        let a = SymMatrix::new(&b + &b.t()).unwrap();
        let e = sym_eig(&a).unwrap();
        let tr: f64 = a.diag().sum();
        assert!((e.values.sum() - tr).abs() < 1e-10);
        let back = e.reconstruct_with(|l| l);
        let err = (back.as_array() - a.as_array())
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(err < 1e-9 * a.norm_inf());
        let vtv = e.vectors.t().dot(&e.vectors);
        assert!((vtv - Array2::<f64>::eye(6))
            .iter()
            .all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn powers() {
        let r = psd_power(&SymMatrix::from_diag(&[4.0, 9.0]), Exponent::Half).unwrap();
        assert!((r[(0, 0)] - 2.0).abs() < 1e-14 && (r[(1, 1)] - 3.0).abs() < 1e-14);
        let r = psd_power(&SymMatrix::identity(3), Exponent::NegOne).unwrap();
        assert_eq!(r, SymMatrix::identity(3));
        let a = random_spd(5, 9);
        let h = psd_power(&a, Exponent::NegHalf).unwrap();
        let s = h.as_array().dot(a.as_array()).dot(h.as_array());
        assert!((s - Array2::<f64>::eye(5)).iter().all(|v| v.abs() < 1e-8));
        let sq = psd_power(&a, Exponent::Half).unwrap();
        let back = sq.as_array().dot(sq.as_array());
        assert!((back - a.as_array())
            .iter()
            .all(|v| v.abs() < 1e-9 * a.norm_inf()));
        assert!(matches!(
            psd_power(&SymMatrix::from_diag(&[1.0, 0.0]), Exponent::NegHalf),
            Err(NumError::SingularMatrix { .. })
        ));
    }

    #[test]
    fn spectral_norm_trivial() {
        assert!((spectral_norm(array![[0.5]].view()).unwrap() - 0.5).abs() < 1e-15);
        let d = Array2::from_diag(&array![1.0, 3.0, 2.0]);
        assert!((spectral_norm(d.view()).unwrap() - 3.0).abs() < 1e-9);
        assert_eq!(
            spectral_norm(Array2::<f64>::zeros((2, 3)).view()).unwrap(),
            0.0
        );
    }

    #[test]
    fn contraction_examples() {
        let f = SymMatrix::new(array![[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let split = crate::numkit::BlockSplit::leading(1, 2).unwrap();
        let c = contraction_matrix(&BlockHessian::from_full(&f, &split).unwrap()).unwrap();
        assert!((c.p[[0, 0]] - 0.5).abs() < 1e-14);
        assert!((c.ppt_norm - 0.25).abs() < 1e-12);
        assert!(c.certifiable);

        let f = SymMatrix::from_diag(&[1.0, 2.0, 3.0, 4.0]);
        let split = crate::numkit::BlockSplit::leading(2, 4).unwrap();
        let c = contraction_matrix(&BlockHessian::from_full(&f, &split).unwrap()).unwrap();
        assert_eq!(c.ppt_norm, 0.0);
        assert!(c.p.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn lu_matches_spd() {
        let a = random_spd(4, 1);
        let b = array![1.0, -2.0, 0.5, 3.0];
        let x1 = lu_solve(a.view(), &b).unwrap();
        let x2 = spd_solve(&a, &b).unwrap();
        assert!((x1 - x2).iter().all(|v| v.abs() < 1e-12));
    }
}
