use ndarray::Array1;

use super::{check_len, SmoothObjective, SolveError};
use crate::numkit::SymMatrix;

/// `g(x) = f(x) + <A, x>`.
#[derive(Debug, Clone)]
pub struct LinearPerturbed<F> {
    inner: F,
    shift: Array1<f64>,
}

impl<F> LinearPerturbed<F> {
    pub fn inner(&self) -> &F {
        &self.inner
    }

    pub fn shift(&self) -> &Array1<f64> {
        &self.shift
    }
}

pub fn linear_perturb<F: SmoothObjective>(
    f: F,
    shift: Array1<f64>,
) -> Result<LinearPerturbed<F>, SolveError> {
    check_len(f.dim(), shift.len())?;
    Ok(LinearPerturbed { inner: f, shift })
}

impl<F: SmoothObjective> SmoothObjective for LinearPerturbed<F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &Array1<f64>) -> f64 {
        self.inner.value(x) + self.shift.dot(x)
    }

    fn gradient(&self, x: &Array1<f64>) -> Array1<f64> {
        self.inner.gradient(x) + &self.shift
    }

    fn hessian(&self, x: &Array1<f64>) -> SymMatrix {
        self.inner.hessian(x)
    }

    fn third_directional(
        &self,
        x: &Array1<f64>,
        a: &Array1<f64>,
        b: &Array1<f64>,
        c: &Array1<f64>,
    ) -> f64 {
        self.inner.third_directional(x, a, b, c)
    }

    fn partial(&self, x: &Array1<f64>, i: usize) -> f64 {
        self.inner.partial(x, i) + self.shift[i]
    }

    fn partial2(&self, x: &Array1<f64>, i: usize) -> f64 {
        self.inner.partial2(x, i)
    }
}

/// A scalar function of one coordinate with three derivatives.
pub trait ScalarTerm: Send + Sync {
    fn value(&self, x: f64) -> f64;
    fn d1(&self, x: f64) -> f64;
    fn d2(&self, x: f64) -> f64;
    fn d3(&self, x: f64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroTerm;

impl ScalarTerm for ZeroTerm {
    fn value(&self, _x: f64) -> f64 {
        0.0
    }
    fn d1(&self, _x: f64) -> f64 {
        0.0
    }
    fn d2(&self, _x: f64) -> f64 {
        0.0
    }
    fn d3(&self, _x: f64) -> f64 {
        0.0
    }
}

/// `lambda x^2 / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ridge(pub f64);

impl ScalarTerm for Ridge {
    fn value(&self, x: f64) -> f64 {
        0.5 * self.0 * x * x
    }
    fn d1(&self, x: f64) -> f64 {
        self.0 * x
    }
    fn d2(&self, _x: f64) -> f64 {
        self.0
    }
    fn d3(&self, _x: f64) -> f64 {
        0.0
    }
}

type Scalar = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// A term given by four closures: value and the first three derivatives.
pub struct FnTerm {
    value: Scalar,
    d1: Scalar,
    d2: Scalar,
    d3: Scalar,
}

impl FnTerm {
    pub fn new(
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d3: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            value: Box::new(value),
            d1: Box::new(d1),
            d2: Box::new(d2),
            d3: Box::new(d3),
        }
    }
}

impl ScalarTerm for FnTerm {
    fn value(&self, x: f64) -> f64 {
        (self.value)(x)
    }
    fn d1(&self, x: f64) -> f64 {
        (self.d1)(x)
    }
    fn d2(&self, x: f64) -> f64 {
        (self.d2)(x)
    }
    fn d3(&self, x: f64) -> f64 {
        (self.d3)(x)
    }
}

/// `g(x) = f(x) + sum_j t_j(x_j)`.
pub struct SeparablePerturbed<F> {
    inner: F,
    terms: Vec<Box<dyn ScalarTerm>>,
}

impl<F> SeparablePerturbed<F> {
    pub fn inner(&self) -> &F {
        &self.inner
    }

    pub fn terms(&self) -> &[Box<dyn ScalarTerm>] {
        &self.terms
    }

    /// `(t'_j(x_j))_j`.
    pub fn term_gradient(&self, x: &Array1<f64>) -> Array1<f64> {
        self.terms
            .iter()
            .zip(x.iter())
            .map(|(t, &v)| t.d1(v))
            .collect()
    }

    /// `(t''_j(x_j))_j`.
    pub fn term_curvature(&self, x: &Array1<f64>) -> Array1<f64> {
        self.terms
            .iter()
            .zip(x.iter())
            .map(|(t, &v)| t.d2(v))
            .collect()
    }

    /// `(t'''_j(x_j))_j`.
    pub fn term_third(&self, x: &Array1<f64>) -> Array1<f64> {
        self.terms
            .iter()
            .zip(x.iter())
            .map(|(t, &v)| t.d3(v))
            .collect()
    }
}

pub fn separable_perturb<F: SmoothObjective>(
    f: F,
    terms: Vec<Box<dyn ScalarTerm>>,
) -> Result<SeparablePerturbed<F>, SolveError> {
    check_len(f.dim(), terms.len())?;
    Ok(SeparablePerturbed { inner: f, terms })
}

impl<F: SmoothObjective> SmoothObjective for SeparablePerturbed<F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &Array1<f64>) -> f64 {
        self.inner.value(x)
            + self
                .terms
                .iter()
                .zip(x.iter())
                .map(|(t, &v)| t.value(v))
                .sum::<f64>()
    }

    fn gradient(&self, x: &Array1<f64>) -> Array1<f64> {
        self.inner.gradient(x) + self.term_gradient(x)
    }

    fn hessian(&self, x: &Array1<f64>) -> SymMatrix {
        let mut h = self.inner.hessian(x).into_array();
        for (j, t) in self.terms.iter().enumerate() {
            h[[j, j]] += t.d2(x[j]);
        }
        SymMatrix::from_array_unchecked(h)
    }

    fn third_directional(
        &self,
        x: &Array1<f64>,
        a: &Array1<f64>,
        b: &Array1<f64>,
        c: &Array1<f64>,
    ) -> f64 {
        let diag: f64 = (0..x.len())
            .map(|j| self.terms[j].d3(x[j]) * a[j] * b[j] * c[j])
            .sum();
        self.inner.third_directional(x, a, b, c) + diag
    }

    fn partial(&self, x: &Array1<f64>, i: usize) -> f64 {
        self.inner.partial(x, i) + self.terms[i].d1(x[i])
    }

    fn partial2(&self, x: &Array1<f64>, i: usize) -> f64 {
        self.inner.partial2(x, i) + self.terms[i].d2(x[i])
    }
}
