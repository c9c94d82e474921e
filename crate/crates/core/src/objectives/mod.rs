//! Objective functions and their stochastic (minibatch) views.
//!
//! Solvers never call these directly: evaluations go through a
//! [`ZeroOrderOracle`](crate::oracle::ZeroOrderOracle), which counts calls and
//! applies noise. The analytic gradients exposed here are diagnostics.

mod classification;
mod quadratic;

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};

pub use classification::{Logistic, Svm, DEFAULT_REG_C};
pub use quadratic::Quadratic;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveKind {
    Svm,
    Logistic,
    Quadratic,
    FiniteSum,
    Custom,
}

pub trait Objective: fmt::Debug + Send + Sync {
    fn kind(&self) -> ObjectiveKind;

    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Analytic gradient (a subgradient for nonsmooth kinds), if known.
    fn gradient(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }

    /// Whether the objective is L-smooth. The hinge loss is not.
    fn is_smooth(&self) -> bool {
        true
    }

    /// Gradient Lipschitz constant, if computable.
    fn smoothness(&self) -> Option<f64> {
        None
    }

    /// Number of summands when the objective is a finite average.
    fn num_components(&self) -> Option<usize> {
        None
    }

    /// Average of the summands in `batch` (plus any shared regularizer), so
    /// that a uniformly drawn batch gives an unbiased estimate of `value`.
    fn batch_value(&self, _x: &[f64], _batch: &[usize]) -> Option<f64> {
        None
    }
}

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// Objective built from closures.
pub struct Custom {
    dim: usize,
    value: Box<ValueFn>,
    gradient: Option<Box<GradFn>>,
    smoothness: Option<f64>,
}

impl Custom {
    pub fn new(dim: usize, value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            dim,
            value: Box::new(value),
            gradient: None,
            smoothness: None,
        }
    }

    pub fn with_gradient(
        mut self,
        gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.gradient = Some(Box::new(gradient));
        self
    }

    pub fn with_smoothness(mut self, l: f64) -> Self {
        self.smoothness = Some(l);
        self
    }
}

impl fmt::Debug for Custom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Custom")
            .field("dim", &self.dim)
            .field("has_gradient", &self.gradient.is_some())
            .finish()
    }
}

impl Objective for Custom {
    fn kind(&self) -> ObjectiveKind {
        ObjectiveKind::Custom
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.gradient.as_ref().map(|g| g(x))
    }

    fn smoothness(&self) -> Option<f64> {
        self.smoothness
    }
}

/// Uniform average of component objectives sharing one dimension.
#[derive(Debug, Clone)]
pub struct FiniteSum {
    components: Vec<Arc<dyn Objective>>,
}

impl FiniteSum {
    pub fn new(components: Vec<Arc<dyn Objective>>) -> Result<Self> {
        let first = components.first().ok_or(Error::NoRows)?;
        let d = first.dim();
        for c in &components {
            crate::error::check_dim(d, c.dim())?;
        }
        Ok(Self { components })
    }

    fn mean_over(&self, x: &[f64], idx: impl Iterator<Item = usize>) -> f64 {
        let mut sum = 0.0;
        let mut n = 0usize;
        for k in idx {
            sum += self.components[k].value(x);
            n += 1;
        }
        sum / n as f64
    }
}

impl Objective for FiniteSum {
    fn kind(&self) -> ObjectiveKind {
        ObjectiveKind::FiniteSum
    }

    fn dim(&self) -> usize {
        self.components[0].dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.mean_over(x, 0..self.components.len())
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let mut acc = vec![0.0; self.dim()];
        for c in &self.components {
            for (a, g) in acc.iter_mut().zip(c.gradient(x)?) {
                *a += g;
            }
        }
        let m = self.components.len() as f64;
        acc.iter_mut().for_each(|a| *a /= m);
        Some(acc)
    }

    fn is_smooth(&self) -> bool {
        self.components.iter().all(|c| c.is_smooth())
    }

    fn smoothness(&self) -> Option<f64> {
        self.components
            .iter()
            .map(|c| c.smoothness())
            .try_fold(0.0f64, |acc, l| l.map(|l| acc.max(l)))
    }

    fn num_components(&self) -> Option<usize> {
        Some(self.components.len())
    }

    fn batch_value(&self, x: &[f64], batch: &[usize]) -> Option<f64> {
        Some(self.mean_over(x, batch.iter().copied()))
    }
}

/// A finite-sum objective seen through uniformly drawn minibatches: the
/// sample ξ is a batch of distinct component indices.
#[derive(Debug, Clone)]
pub struct StochasticView {
    objective: Arc<dyn Objective>,
    batch_size: usize,
    components: usize,
}

impl StochasticView {
    pub fn new(objective: Arc<dyn Objective>, batch_size: usize) -> Result<Self> {
        let components = objective.num_components().ok_or_else(|| {
            Error::Config("minibatch sampling needs a finite-sum objective".into())
        })?;
        if batch_size == 0 || batch_size > components {
            return Err(Error::InvalidParameter {
                name: "batch_size",
                value: batch_size as f64,
                reason: "must lie in [1, number of components]",
            });
        }
        Ok(Self {
            objective,
            batch_size,
            components,
        })
    }

    pub fn objective(&self) -> &Arc<dyn Objective> {
        &self.objective
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    /// Draws a uniform batch without replacement, returned sorted.
    pub fn sample(&self, rng: &mut impl Rng) -> Vec<usize> {
        let mut idx = rand::seq::index::sample(rng, self.components, self.batch_size).into_vec();
        idx.sort_unstable();
        idx
    }

    pub fn value(&self, x: &[f64], batch: &[usize]) -> Result<f64> {
        self.objective
            .batch_value(x, batch)
            .ok_or_else(|| Error::Config("objective does not support batch evaluation".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::synthetic_classification;
    use crate::rng::{Stream, Streams};

    #[test]
    fn full_batch_is_exact() {
        let ds = synthetic_classification(60, 4, 3, 2.0).unwrap();
        let f: Arc<dyn Objective> = Arc::new(Logistic::new(ds, DEFAULT_REG_C).unwrap());
        let view = StochasticView::new(f.clone(), 60).unwrap();
        let mut rng = Streams::new(1).rng(Stream::Minibatch);
        let x = [0.1, -0.3, 0.2, 0.5];
        let batch = view.sample(&mut rng);
        assert_eq!(view.value(&x, &batch).unwrap().to_bits(), f.value(&x).to_bits());
    }

    #[test]
    fn minibatch_mean_is_unbiased() {
        let ds = synthetic_classification(40, 3, 9, 1.0).unwrap();
        let f: Arc<dyn Objective> = Arc::new(Logistic::new(ds, DEFAULT_REG_C).unwrap());
        let view = StochasticView::new(f.clone(), 5).unwrap();
        let mut rng = Streams::new(2).rng(Stream::Minibatch);
        let x = [0.4, -0.2, 0.7];
        let n = 100_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let v = view.value(&x, &view.sample(&mut rng)).unwrap();
            s += v;
            s2 += v * v;
        }
        let mean = s / n as f64;
        let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - f.value(&x)).abs() <= 3.0 * se, "{mean} vs {}", f.value(&x));
    }

    #[test]
    fn view_rejects_bad_batches() {
        let q: Arc<dyn Objective> = Arc::new(Quadratic::identity(2));
        assert!(StochasticView::new(q, 1).is_err());
        let ds = synthetic_classification(10, 2, 1, 1.0).unwrap();
        let f: Arc<dyn Objective> = Arc::new(Logistic::new(ds, 10.0).unwrap());
        assert!(StochasticView::new(f.clone(), 0).is_err());
        assert!(StochasticView::new(f, 11).is_err());
    }

    #[test]
    fn finite_sum_of_quadratics() {
        let parts: Vec<Arc<dyn Objective>> = vec![
            Arc::new(Quadratic::diagonal(vec![1.0, 1.0], vec![1.0, 0.0]).unwrap()),
            Arc::new(Quadratic::diagonal(vec![1.0, 1.0], vec![-1.0, 0.0]).unwrap()),
        ];
        let f = FiniteSum::new(parts).unwrap();
        let x = [2.0, 1.0];
        // mean of 0.5*|x|^2 - x1 and 0.5*|x|^2 + x1
        assert_eq!(f.value(&x), 2.5);
        assert_eq!(f.gradient(&x).unwrap(), vec![2.0, 1.0]);
        assert_eq!(f.batch_value(&x, &[0]).unwrap(), 0.5);
        assert_eq!(f.smoothness(), Some(1.0));
    }
}
