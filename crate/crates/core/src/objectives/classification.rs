//! Linear classification losses with an l2 regularizer `‖w‖² / (2C)`.

use super::{Objective, ObjectiveKind};
use crate::dataio::Dataset;
use crate::error::{positive, Result};

/// Regularization constant used by both experiment problems.
pub const DEFAULT_REG_C: f64 = 10.0;

fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Largest eigenvalue of `XᵀX` by power iteration from the all-ones start.
fn gram_lambda_max(data: &Dataset) -> f64 {
    let d = data.n_features();
    let mut v = vec![1.0 / (d as f64).sqrt(); d];
    let mut lambda = 0.0;
    for _ in 0..1000 {
        let mut w = vec![0.0; d];
        for k in 0..data.len() {
            let z = data.row_dot(k, &v);
            let (idx, val) = data.row(k);
            for (&j, &x) in idx.iter().zip(val) {
                w[j] += z * x;
            }
        }
        let n = crate::vector::norm(&w);
        if n == 0.0 {
            return 0.0;
        }
        let next = crate::vector::dot(&v, &w);
        w.iter_mut().for_each(|wi| *wi /= n);
        v = w;
        if (next - lambda).abs() <= 1e-12 * next.abs() {
            return next;
        }
        lambda = next;
    }
    lambda
}

/// Soft-margin SVM, decision vector `(w, b)` with the bias last:
/// `(1/m) Σ (1 − y_k[(Xw)_k − b])₊ + ‖w‖²/(2C)`. The bias is not regularized.
#[derive(Debug, Clone)]
pub struct Svm {
    data: Dataset,
    reg_c: f64,
}

impl Svm {
    pub fn new(data: Dataset, reg_c: f64) -> Result<Self> {
        positive("reg_c", reg_c)?;
        Ok(Self { data, reg_c })
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    fn margin(&self, k: usize, x: &[f64]) -> f64 {
        let d = self.data.n_features();
        self.data.labels()[k] * (self.data.row_dot(k, &x[..d]) - x[d])
    }

    fn regularizer(&self, x: &[f64]) -> f64 {
        let w = &x[..self.data.n_features()];
        crate::vector::norm_sq(w) / (2.0 * self.reg_c)
    }

    fn mean_hinge(&self, x: &[f64], idx: impl Iterator<Item = usize>) -> f64 {
        let (mut sum, mut n) = (0.0, 0usize);
        for k in idx {
            sum += (1.0 - self.margin(k, x)).max(0.0);
            n += 1;
        }
        sum / n as f64
    }
}

impl Objective for Svm {
    fn kind(&self) -> ObjectiveKind {
        ObjectiveKind::Svm
    }

    fn dim(&self) -> usize {
        self.data.n_features() + 1
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.mean_hinge(x, 0..self.data.len()) + self.regularizer(x)
    }

    /// Subgradient; active hinge terms are those with margin strictly below 1.
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let d = self.data.n_features();
        let m = self.data.len() as f64;
        let mut g = vec![0.0; d + 1];
        for k in 0..self.data.len() {
            if self.margin(k, x) < 1.0 {
                let y = self.data.labels()[k];
                let (idx, val) = self.data.row(k);
                for (&j, &v) in idx.iter().zip(val) {
                    g[j] -= y * v / m;
                }
                g[d] += y / m;
            }
        }
        for j in 0..d {
            g[j] += x[j] / self.reg_c;
        }
        Some(g)
    }

    fn is_smooth(&self) -> bool {
        false
    }

    fn num_components(&self) -> Option<usize> {
        Some(self.data.len())
    }

    fn batch_value(&self, x: &[f64], batch: &[usize]) -> Option<f64> {
        Some(self.mean_hinge(x, batch.iter().copied()) + self.regularizer(x))
    }
}

/// Regularized logistic regression:
/// `(1/m) Σ log(1 + exp(−y_k (Xw)_k)) + ‖w‖²/(2C)`.
#[derive(Debug, Clone)]
pub struct Logistic {
    data: Dataset,
    reg_c: f64,
    smoothness: f64,
}

impl Logistic {
    pub fn new(data: Dataset, reg_c: f64) -> Result<Self> {
        positive("reg_c", reg_c)?;
        let smoothness = gram_lambda_max(&data) / (4.0 * data.len() as f64) + 1.0 / reg_c;
        Ok(Self {
            data,
            reg_c,
            smoothness,
        })
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    fn mean_loss(&self, w: &[f64], idx: impl Iterator<Item = usize>) -> f64 {
        let y = self.data.labels();
        let (mut sum, mut n) = (0.0, 0usize);
        for k in idx {
            sum += softplus(-y[k] * self.data.row_dot(k, w));
            n += 1;
        }
        sum / n as f64 + crate::vector::norm_sq(w) / (2.0 * self.reg_c)
    }
}

impl Objective for Logistic {
    fn kind(&self) -> ObjectiveKind {
        ObjectiveKind::Logistic
    }

    fn dim(&self) -> usize {
        self.data.n_features()
    }

    fn value(&self, w: &[f64]) -> f64 {
        self.mean_loss(w, 0..self.data.len())
    }

    fn gradient(&self, w: &[f64]) -> Option<Vec<f64>> {
        let m = self.data.len() as f64;
        let y = self.data.labels();
        let mut g: Vec<f64> = w.iter().map(|wi| wi / self.reg_c).collect();
        for (k, &yk) in y.iter().enumerate() {
            let coef = -yk * sigmoid(-yk * self.data.row_dot(k, w)) / m;
            let (idx, val) = self.data.row(k);
            for (&j, &v) in idx.iter().zip(val) {
                g[j] += coef * v;
            }
        }
        Some(g)
    }

    fn smoothness(&self) -> Option<f64> {
        Some(self.smoothness)
    }

    fn num_components(&self) -> Option<usize> {
        Some(self.data.len())
    }

    fn batch_value(&self, w: &[f64], batch: &[usize]) -> Option<f64> {
        Some(self.mean_loss(w, batch.iter().copied()))
    }
}
