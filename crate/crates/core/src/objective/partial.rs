use ndarray::Array1;

use super::{check_len, newton_minimize, SmoothObjective, SolveError, SolveOptions, SolveReport};
use crate::numkit::{BlockSplit, SymMatrix};

/// Which block is held fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixedBlock {
    Target,
    Nuisance,
}

/// `f` as a function of the coordinates in `free`, the others pinned to `base`.
pub struct Restricted<'a, F: ?Sized> {
    f: &'a F,
    free: Vec<usize>,
    base: Array1<f64>,
}

impl<'a, F: SmoothObjective + ?Sized> Restricted<'a, F> {
    pub fn new(f: &'a F, free: Vec<usize>, base: Array1<f64>) -> Result<Self, SolveError> {
        check_len(f.dim(), base.len())?;
        if let Some(&bad) = free.iter().find(|&&i| i >= base.len()) {
            return Err(SolveError::DimensionMismatch {
                expected: base.len(),
                got: bad + 1,
            });
        }
        Ok(Self { f, free, base })
    }

    /// Full-dimensional point with the free coordinates set to `y`.
    pub fn embed(&self, y: &Array1<f64>) -> Array1<f64> {
        let mut x = self.base.clone();
        for (k, &i) in self.free.iter().enumerate() {
            x[i] = y[k];
        }
        x
    }

    fn embed_direction(&self, y: &Array1<f64>) -> Array1<f64> {
        let mut x = Array1::zeros(self.base.len());
        for (k, &i) in self.free.iter().enumerate() {
            x[i] = y[k];
        }
        x
    }
}

impl<F: SmoothObjective + ?Sized> SmoothObjective for Restricted<'_, F> {
    fn dim(&self) -> usize {
        self.free.len()
    }

    fn value(&self, y: &Array1<f64>) -> f64 {
        self.f.value(&self.embed(y))
    }

    fn gradient(&self, y: &Array1<f64>) -> Array1<f64> {
        let g = self.f.gradient(&self.embed(y));
        self.free.iter().map(|&i| g[i]).collect()
    }

    fn hessian(&self, y: &Array1<f64>) -> SymMatrix {
        let h = self.f.hessian(&self.embed(y));
        SymMatrix::from_upper(self.free.len(), |a, b| h[(self.free[a], self.free[b])])
    }

    fn third_directional(
        &self,
        y: &Array1<f64>,
        a: &Array1<f64>,
        b: &Array1<f64>,
        c: &Array1<f64>,
    ) -> f64 {
        self.f.third_directional(
            &self.embed(y),
            &self.embed_direction(a),
            &self.embed_direction(b),
            &self.embed_direction(c),
        )
    }

    fn partial(&self, y: &Array1<f64>, k: usize) -> f64 {
        self.f.partial(&self.embed(y), self.free[k])
    }

    fn partial2(&self, y: &Array1<f64>, k: usize) -> f64 {
        self.f.partial2(&self.embed(y), self.free[k])
    }
}

/// Minimizes `f` over the free block with the other block fixed at
/// `fixed_value`. The report's `argmin` is the free block only.
pub fn partial_minimize<F: SmoothObjective + ?Sized>(
    f: &F,
    split: &BlockSplit,
    fixed: FixedBlock,
    fixed_value: &Array1<f64>,
    warm_start: &Array1<f64>,
    opts: &SolveOptions,
) -> Result<SolveReport, SolveError> {
    check_len(f.dim(), split.total())?;
    let (fixed_idx, free_idx) = match fixed {
        FixedBlock::Target => (split.target(), split.nuisance()),
        FixedBlock::Nuisance => (split.nuisance(), split.target()),
    };
    check_len(fixed_idx.len(), fixed_value.len())?;
    check_len(free_idx.len(), warm_start.len())?;
    let mut base = Array1::zeros(split.total());
    for (k, &i) in fixed_idx.iter().enumerate() {
        base[i] = fixed_value[k];
    }
    let r = Restricted::new(f, free_idx.to_vec(), base)?;
    newton_minimize(&r, warm_start, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::finite_diff_check;
    use crate::objective::QuadraticObjective;
    use ndarray::array;

    #[test]
    fn quadratic_partial_response() {
        let q = QuadraticObjective::new(
            array![0.3, -0.4],
            SymMatrix::new(array![[2.0, 1.0], [1.0, 2.0]]).unwrap(),
        )
        .unwrap();
        let split = BlockSplit::leading(1, 2).unwrap();
        for delta in [-1.0, 0.25, 3.0] {
            let r = partial_minimize(
                &q,
                &split,
                FixedBlock::Nuisance,
                &array![-0.4 + delta],
                &array![0.0],
                &SolveOptions::newton(),
            )
            .unwrap();
            assert!((r.argmin[0] - 0.3 + 0.5 * delta).abs() < 1e-14);
        }
    }

    #[test]
    fn separable_blocks_do_not_interact() {
        let q = QuadraticObjective::new(
            array![1.0, 2.0, 3.0],
            SymMatrix::from_diag(&[1.0, 2.0, 3.0]),
        )
        .unwrap();
        let split = BlockSplit::leading(1, 3).unwrap();
        for nu in [array![0.0, 0.0], array![5.0, -7.0]] {
            let r = partial_minimize(
                &q,
                &split,
                FixedBlock::Nuisance,
                &nu,
                &array![0.0],
                &SolveOptions::newton(),
            )
            .unwrap();
            assert!((r.argmin[0] - 1.0).abs() < 1e-14);
        }
        let r = partial_minimize(
            &q,
            &split,
            FixedBlock::Target,
            &array![9.0],
            &array![0.0, 0.0],
            &SolveOptions::newton(),
        )
        .unwrap();
        assert!((&r.argmin - &array![2.0, 3.0])
            .iter()
            .all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn restriction_derivatives_are_consistent() {
        let q = QuadraticObjective::new(
            array![1.0, 2.0, 3.0],
            SymMatrix::new(array![[3.0, 1.0, 0.5], [1.0, 2.0, 0.2], [0.5, 0.2, 1.0]]).unwrap(),
        )
        .unwrap();
        let r = Restricted::new(&q, vec![2, 0], array![0.0, -1.0, 0.0]).unwrap();
        assert!(finite_diff_check(&r, &array![0.3, 0.4]).max() < 1e-6);
        assert_eq!(r.hessian(&array![0.0, 0.0])[(0, 1)], 0.5);
    }
}
