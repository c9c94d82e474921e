use nalgebra::{DMatrix, DVector};

use super::{Objective, ObjectiveKind};
use crate::error::{check_dim, Error, Result};

/// `f(x) = ½ xᵀAx − bᵀx` with symmetric positive semidefinite `A`.
///
/// The spectrum is computed once at construction: `L = λ_max(A)`,
/// `μ = λ_min(A)`, and the PL constant is the smallest positive eigenvalue
/// (equal to `μ` when `A` is nonsingular).
#[derive(Debug, Clone)]
pub struct Quadratic {
    dim: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    lambda_max: f64,
    lambda_min: f64,
    pl_constant: f64,
    minimizer: Option<Vec<f64>>,
}

impl Quadratic {
    /// `a` is row-major `d × d`.
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let d = b.len();
        check_dim(d * d, a.len())?;
        if d == 0 {
            return Err(Error::Config("quadratic needs d >= 1".into()));
        }
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        for i in 0..d {
            for j in 0..i {
                if (a[i * d + j] - a[j * d + i]).abs() > 1e-12 * scale {
                    return Err(Error::Config(format!("A is not symmetric at ({i}, {j})")));
                }
            }
        }
        let eig = DMatrix::from_row_slice(d, d, &a).symmetric_eigen();
        let tol = 1e-10 * scale;
        let lambda_min = eig.eigenvalues.min();
        if lambda_min < -tol {
            return Err(Error::Config(format!(
                "A is not positive semidefinite (λ_min = {lambda_min})"
            )));
        }
        let lambda_max = eig.eigenvalues.max();
        let pl_constant = eig
            .eigenvalues
            .iter()
            .copied()
            .filter(|&l| l > tol)
            .fold(f64::INFINITY, f64::min);

        // pseudo-inverse solve; b outside range(A) means f is unbounded below
        let bv = DVector::from_column_slice(&b);
        let mut x = DVector::zeros(d);
        for (k, &l) in eig.eigenvalues.iter().enumerate() {
            if l > tol {
                let u = eig.eigenvectors.column(k);
                x += u * (u.dot(&bv) / l);
            }
        }
        let residual = (DMatrix::from_row_slice(d, d, &a) * &x - &bv).norm();
        let minimizer = (residual <= 1e-8 * bv.norm().max(1.0)).then(|| x.as_slice().to_vec());

        Ok(Self {
            dim: d,
            a,
            b,
            lambda_max: lambda_max.max(0.0),
            lambda_min: lambda_min.max(0.0),
            pl_constant,
            minimizer,
        })
    }

    pub fn identity(d: usize) -> Self {
        Self::diagonal(vec![1.0; d], vec![0.0; d]).expect("identity is PSD")
    }

    pub fn diagonal(diag: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let d = diag.len();
        check_dim(d, b.len())?;
        let mut a = vec![0.0; d * d];
        for (i, v) in diag.into_iter().enumerate() {
            a[i * d + i] = v;
        }
        Self::new(a, b)
    }

    /// Strong convexity constant `λ_min(A)`.
    pub fn mu(&self) -> f64 {
        self.lambda_min
    }

    pub fn pl_constant(&self) -> f64 {
        self.pl_constant
    }

    /// Unconstrained minimizer, when `f` is bounded below.
    pub fn minimizer(&self) -> Option<&[f64]> {
        self.minimizer.as_deref()
    }

    /// Unconstrained minimum value.
    pub fn min_value(&self) -> Option<f64> {
        self.minimizer().map(|x| self.value(x))
    }
}

impl Objective for Quadratic {
    fn kind(&self) -> ObjectiveKind {
        ObjectiveKind::Quadratic
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        let d = self.dim;
        let mut quad = 0.0;
        for i in 0..d {
            quad += x[i] * crate::vector::dot(&self.a[i * d..(i + 1) * d], x);
        }
        0.5 * quad - crate::vector::dot(&self.b, x)
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let d = self.dim;
        Some(
            (0..d)
                .map(|i| crate::vector::dot(&self.a[i * d..(i + 1) * d], x) - self.b[i])
                .collect(),
        )
    }

    fn smoothness(&self) -> Option<f64> {
        Some(self.lambda_max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_fixture() {
        let q = Quadratic::identity(3);
        assert_eq!(q.value(&[1.0, 2.0, 2.0]), 4.5);
        assert_eq!(q.gradient(&[1.0, -2.0, 3.0]).unwrap(), vec![1.0, -2.0, 3.0]);
        assert_eq!(q.smoothness(), Some(1.0));
        assert!((q.mu() - 1.0).abs() < 1e-14);
        assert!((q.pl_constant() - 1.0).abs() < 1e-14);
        assert_eq!(q.min_value(), Some(0.0));
    }

    #[test]
    fn singular_psd_uses_smallest_positive_eigenvalue() {
        let q = Quadratic::diagonal(vec![2.0, 0.0, 0.5], vec![2.0, 0.0, 1.0]).unwrap();
        assert_eq!(q.mu(), 0.0);
        assert!((q.pl_constant() - 0.5).abs() < 1e-12);
        let x = q.minimizer().unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[2] - 2.0).abs() < 1e-12);
        // b outside range(A): unbounded below
        let u = Quadratic::diagonal(vec![1.0, 0.0], vec![0.0, 1.0]).unwrap();
        assert!(u.minimizer().is_none());
    }

    #[test]
    fn rejects_non_psd_and_asymmetric() {
        assert!(Quadratic::diagonal(vec![1.0, -1.0], vec![0.0, 0.0]).is_err());
        assert!(Quadratic::new(vec![1.0, 0.5, 0.0, 1.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn dense_gradient_and_value_agree() {
        let a = vec![2.0, 1.0, 1.0, 3.0];
        let q = Quadratic::new(a, vec![1.0, -1.0]).unwrap();
        let x = [0.5, -0.25];
        // Ax = (0.75, -0.25); f = ½ xᵀAx − bᵀx
        assert!((q.value(&x) - (0.5 * (0.5 * 0.75 + 0.25 * 0.25) - 0.75)).abs() < 1e-15);
        assert_eq!(q.gradient(&x).unwrap(), vec![-0.25, 0.75]);
        let xs = q.minimizer().unwrap();
        let g = q.gradient(xs).unwrap();
        assert!(crate::vector::norm(&g) < 1e-12);
    }
}
