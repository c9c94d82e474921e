//! Compact convex domains with linear minimization oracles.

use crate::error::{check_dim, positive, Error, Result};
use crate::vector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeasibleSet {
    /// Probability simplex `{x ≥ 0, Σx = 1}`.
    Simplex { dim: usize },
    L1Ball { dim: usize, radius: f64 },
    L2Ball { dim: usize, radius: f64 },
    /// `R^d`; exists so gradient descent shares the problem schema. Has no LMO.
    Unconstrained { dim: usize },
}

impl FeasibleSet {
    pub fn simplex(dim: usize) -> Self {
        Self::Simplex { dim }
    }

    pub fn l1_ball(dim: usize, radius: f64) -> Result<Self> {
        Ok(Self::L1Ball {
            dim,
            radius: positive("radius", radius)?,
        })
    }

    pub fn l2_ball(dim: usize, radius: f64) -> Result<Self> {
        Ok(Self::L2Ball {
            dim,
            radius: positive("radius", radius)?,
        })
    }

    pub fn unconstrained(dim: usize) -> Self {
        Self::Unconstrained { dim }
    }

    pub fn dim(&self) -> usize {
        match *self {
            Self::Simplex { dim }
            | Self::L1Ball { dim, .. }
            | Self::L2Ball { dim, .. }
            | Self::Unconstrained { dim } => dim,
        }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self, Self::Unconstrained { .. })
    }

    /// Euclidean diameter `D`.
    pub fn diameter(&self) -> f64 {
        match *self {
            Self::Simplex { .. } => std::f64::consts::SQRT_2,
            Self::L1Ball { radius, .. } | Self::L2Ball { radius, .. } => 2.0 * radius,
            Self::Unconstrained { .. } => f64::INFINITY,
        }
    }

    /// Default starting point: `e_1` for the simplex, `r·e_1` for balls, zero
    /// for `R^d`.
    pub fn first_vertex(&self) -> Vec<f64> {
        let d = self.dim();
        let mut x = vec![0.0; d];
        match *self {
            Self::Simplex { .. } => x[0] = 1.0,
            Self::L1Ball { radius, .. } | Self::L2Ball { radius, .. } => x[0] = radius,
            Self::Unconstrained { .. } => {}
        }
        x
    }

    /// `argmin_{s ∈ Q} ⟨s, g⟩`, ties broken towards the lowest coordinate.
    pub fn lmo(&self, g: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), g.len())?;
        let d = self.dim();
        match *self {
            Self::Simplex { .. } => {
                let j = argmin_first(g.iter().copied());
                Ok(vector::basis(d, j))
            }
            Self::L1Ball { radius, .. } => {
                let j = argmin_first(g.iter().map(|v| -v.abs()));
                let mut s = vec![0.0; d];
                // g_j = 0 only when g = 0; any point is optimal, keep +r e_j
                s[j] = if g[j] > 0.0 { -radius } else { radius };
                Ok(s)
            }
            Self::L2Ball { radius, .. } => {
                let n = vector::norm(g);
                if n == 0.0 {
                    return Ok(self.first_vertex());
                }
                Ok(g.iter().map(|v| -radius * v / n).collect())
            }
            Self::Unconstrained { .. } => Err(Error::NoLinearMinimizationOracle),
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.violation(x) <= tol
    }

    /// Largest constraint violation at `x`; zero inside the set, infinite on
    /// a dimension mismatch or non-finite input.
    pub fn violation(&self, x: &[f64]) -> f64 {
        if x.len() != self.dim() || x.iter().any(|v| !v.is_finite()) {
            return f64::INFINITY;
        }
        match *self {
            Self::Simplex { .. } => {
                let neg = x.iter().fold(0.0f64, |m, &v| m.max(-v));
                neg.max((x.iter().sum::<f64>() - 1.0).abs())
            }
            Self::L1Ball { radius, .. } => (x.iter().map(|v| v.abs()).sum::<f64>() - radius).max(0.0),
            Self::L2Ball { radius, .. } => (vector::norm(x) - radius).max(0.0),
            Self::Unconstrained { .. } => 0.0,
        }
    }
}

fn argmin_first(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0usize, f64::INFINITY);
    for (j, v) in values.enumerate() {
        if v < best.1 {
            best = (j, v);
        }
    }
    best.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lmo_closed_forms() {
        assert_eq!(FeasibleSet::simplex(3).lmo(&[3.0, -1.0, 2.0]).unwrap(), vec![0.0, 1.0, 0.0]);
        let s = FeasibleSet::l2_ball(2, 1.0).unwrap().lmo(&[3.0, 4.0]).unwrap();
        assert!((s[0] + 0.6).abs() < 1e-15 && (s[1] + 0.8).abs() < 1e-15);
        assert_eq!(FeasibleSet::l1_ball(2, 2.0).unwrap().lmo(&[3.0, -4.0]).unwrap(), vec![0.0, 2.0]);
    }

    #[test]
    fn lmo_ties_pick_lowest_index() {
        assert_eq!(FeasibleSet::simplex(3).lmo(&[1.0, 0.0, 0.0]).unwrap(), vec![0.0, 1.0, 0.0]);
        let l1 = FeasibleSet::l1_ball(3, 1.0).unwrap();
        assert_eq!(l1.lmo(&[-2.0, 2.0, 1.0]).unwrap(), vec![1.0, 0.0, 0.0]);
        assert_eq!(l1.lmo(&[0.0, 0.0, 0.0]).unwrap(), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn unconstrained_has_no_lmo() {
        let u = FeasibleSet::unconstrained(2);
        assert!(matches!(u.lmo(&[1.0, 2.0]), Err(Error::NoLinearMinimizationOracle)));
        assert!(!u.is_bounded());
    }

    #[test]
    fn diameters() {
        assert_eq!(FeasibleSet::simplex(5).diameter(), 2f64.sqrt());
        assert_eq!(FeasibleSet::l1_ball(5, 1.5).unwrap().diameter(), 3.0);
        assert_eq!(FeasibleSet::l2_ball(5, 2.0).unwrap().diameter(), 4.0);
    }

    #[test]
    fn membership() {
        let s = FeasibleSet::simplex(4);
        assert!(s.contains(&[0.25; 4], 1e-12));
        assert!(!s.contains(&[-0.1, 0.5, 0.3, 0.3], 1e-12));
        assert!(!s.contains(&[0.25; 3], 1e-12));
        assert!(FeasibleSet::l1_ball(2, 1.0).unwrap().contains(&[0.5, -0.5], 0.0));
        assert!(!FeasibleSet::l2_ball(2, 1.0).unwrap().contains(&[0.8, 0.8], 1e-12));
    }

    #[test]
    fn rejects_bad_radius_and_dimension() {
        assert!(FeasibleSet::l2_ball(2, 0.0).is_err());
        assert!(FeasibleSet::simplex(2).lmo(&[1.0]).is_err());
    }

    fn random_member(set: &FeasibleSet, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let d = set.dim();
        match *set {
            FeasibleSet::Simplex { .. } => {
                let e: Vec<f64> = (0..d).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
                let s: f64 = e.iter().sum();
                e.iter().map(|v| v / s).collect()
            }
            FeasibleSet::L1Ball { radius, .. } => {
                let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                let n: f64 = v.iter().map(|x| x.abs()).sum();
                let r = radius * rng.random::<f64>();
                v.iter().map(|x| x * r / n).collect()
            }
            FeasibleSet::L2Ball { radius, .. } => {
                let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                let r = radius * rng.random::<f64>();
                let n = vector::norm(&v);
                v.iter().map(|x| x * r / n).collect()
            }
            FeasibleSet::Unconstrained { .. } => unreachable!(),
        }
    }

    fn sets(d: usize) -> [FeasibleSet; 3] {
        [
            FeasibleSet::simplex(d),
            FeasibleSet::l1_ball(d, 1.5).unwrap(),
            FeasibleSet::l2_ball(d, 0.7).unwrap(),
        ]
    }

    #[test]
    fn diameter_certificate() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for set in sets(6) {
            for _ in 0..10_000 {
                let (x, y) = (random_member(&set, &mut rng), random_member(&set, &mut rng));
                assert!(vector::dist(&x, &y) <= set.diameter());
            }
            // two extreme points attain it
            let a = set.first_vertex();
            let b = set.lmo(&a).unwrap();
            assert!((vector::dist(&a, &b) - set.diameter()).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn convex_combinations_stay_inside(seed in any::<u64>(), gamma in 0.0f64..=1.0, d in 1usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for set in sets(d) {
                let mut x = random_member(&set, &mut rng);
                let g: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                let s = set.lmo(&g).unwrap();
                prop_assert!(set.contains(&s, 1e-12));
                vector::convex_step(&mut x, &s, gamma);
                prop_assert!(set.contains(&x, 1e-12));
            }
        }
    }
}
