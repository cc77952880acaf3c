#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2};
use perturbopt::numkit::SymMatrix;
use rand::Rng;

pub fn random_spd<R: Rng>(n: usize, rng: &mut R) -> SymMatrix {
    let m = Array2::from_shape_fn((n, n), |_| rng.random_range(-1.0..1.0));
    let a = m.dot(&m.t()) + Array2::<f64>::eye(n) * 0.3;
    SymMatrix::new((&a + &a.t()) * 0.5).unwrap()
}

pub fn to_na(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

pub fn from_na(a: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((a.nrows(), a.ncols()), |(i, j)| a[(i, j)])
}

/// `A^e` for symmetric positive definite `A` via nalgebra's eigensolver.
pub fn spd_power(a: &Array2<f64>, e: f64) -> Array2<f64> {
    let eig = SymmetricEigen::new(to_na(a));
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| v.powf(e)));
    from_na(&(&eig.eigenvectors * d * eig.eigenvectors.transpose()))
}

pub fn eigenvalues(a: &Array2<f64>) -> Vec<f64> {
    SymmetricEigen::new(to_na(a))
        .eigenvalues
        .iter()
        .copied()
        .collect()
}

pub fn solve(a: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let x = to_na(a)
        .lu()
        .solve(&nalgebra::DVector::from_iterator(
            b.len(),
            b.iter().copied(),
        ))
        .unwrap();
    Array1::from_iter(x.iter().copied())
}

pub fn sub(a: &Array2<f64>, rows: &[usize], cols: &[usize]) -> Array2<f64> {
    Array2::from_shape_fn((rows.len(), cols.len()), |(i, j)| a[[rows[i], cols[j]]])
}

pub fn sup(x: &Array1<f64>) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Max over `z` in `{-1, 1}^q` of `|row . z|`, by enumeration.
pub fn brute_sign_max(row: &[f64]) -> f64 {
    let q = row.len();
    (0u32..1 << q)
        .map(|mask| {
            row.iter()
                .enumerate()
                .map(|(k, v)| if mask >> k & 1 == 1 { *v } else { -v })
                .sum::<f64>()
                .abs()
        })
        .fold(0.0, f64::max)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
