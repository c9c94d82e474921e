//! Reference optimum `f*` for gap traces, computed with the analytic
//! gradient. Not a zero-order method; never used inside the solvers.

use crate::feasible_sets::FeasibleSet;
use crate::objectives::Objective;
use crate::vector;

/// Euclidean projection onto the set.
pub fn project(set: &FeasibleSet, x: &[f64]) -> Vec<f64> {
    match *set {
        FeasibleSet::Simplex { .. } => project_simplex(x, 1.0),
        FeasibleSet::L1Ball { radius, .. } => {
            if x.iter().map(|v| v.abs()).sum::<f64>() <= radius {
                return x.to_vec();
            }
            let mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
            project_simplex(&mags, radius)
                .into_iter()
                .zip(x)
                .map(|(p, v)| p.copysign(*v))
                .collect()
        }
        FeasibleSet::L2Ball { radius, .. } => {
            let n = vector::norm(x);
            if n <= radius {
                x.to_vec()
            } else {
                x.iter().map(|v| v * radius / n).collect()
            }
        }
        FeasibleSet::Unconstrained { .. } => x.to_vec(),
    }
}

/// Projection onto `{x ≥ 0, Σx = z}` by sorting.
fn project_simplex(x: &[f64], z: f64) -> Vec<f64> {
    let mut u = x.to_vec();
    u.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cum += uj;
        let t = (cum - z) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    x.iter().map(|v| (v - theta).max(0.0)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceOptimum {
    pub value: f64,
    pub x: Vec<f64>,
    /// Optimality measure at `x`: the Frank-Wolfe gap on bounded sets (an
    /// upper bound on `value − f*`), the gradient norm when unconstrained.
    pub certificate: f64,
    pub iterations: usize,
}

pub const REFERENCE_TOL: f64 = 1e-12;
const MAX_ITERATIONS: usize = 200_000;

/// Frank-Wolfe gap `⟨∇f(x), x − LMO(∇f(x))⟩ ≥ f(x) − f*`.
pub fn fw_gap(set: &FeasibleSet, grad: &[f64], x: &[f64]) -> Option<f64> {
    let s = set.lmo(grad).ok()?;
    Some(grad.iter().zip(x).zip(&s).map(|((g, xi), si)| g * (xi - si)).sum())
}

/// Minimizes a smooth objective with an analytic gradient by accelerated
/// projected gradient with adaptive restart. Returns `None` for objectives
/// that are nonsmooth or lack a gradient or smoothness constant.
pub fn reference_optimum(objective: &dyn Objective, set: &FeasibleSet) -> Option<ReferenceOptimum> {
    if !objective.is_smooth() {
        return None;
    }
    let l = objective.smoothness().filter(|l| *l > 0.0 && l.is_finite())?;
    let d = set.dim();
    let mut x = project(set, &set.first_vertex());
    objective.gradient(&x)?;
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut certificate = f64::INFINITY;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        let gx = objective.gradient(&x)?;
        certificate = if set.is_bounded() {
            fw_gap(set, &gx, &x)?
        } else {
            vector::norm(&gx)
        };
        if certificate <= REFERENCE_TOL {
            break;
        }
        iterations += 1;
        let gy = objective.gradient(&y)?;
        let trial: Vec<f64> = (0..d).map(|j| y[j] - gy[j] / l).collect();
        let next = project(set, &trial);
        let restart = gy.iter().zip(&next).zip(&x).map(|((g, n), xo)| g * (n - xo)).sum::<f64>() > 0.0;
        if restart {
            // plain projected step from x, so a restart always makes progress
            let trial: Vec<f64> = (0..d).map(|j| x[j] - gx[j] / l).collect();
            x = project(set, &trial);
            y.clone_from(&x);
            t = 1.0;
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let w = (t - 1.0) / t_next;
        for j in 0..d {
            y[j] = next[j] + w * (next[j] - x[j]);
        }
        x = next;
        t = t_next;
    }
    Some(ReferenceOptimum {
        value: objective.value(&x),
        x,
        certificate,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::synthetic_classification;
    use crate::objectives::{Logistic, Quadratic, Svm};

    #[test]
    fn simplex_projection() {
        let p = project(&FeasibleSet::simplex(3), &[0.5, 0.5, 0.5]);
        for v in p {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(project(&FeasibleSet::simplex(2), &[2.0, -1.0]), vec![1.0, 0.0]);
        let p = project(&FeasibleSet::l1_ball(2, 1.0).unwrap(), &[2.0, -2.0]);
        assert_eq!(p, vec![0.5, -0.5]);
    }

    #[test]
    fn barycenter_optimum_on_simplex() {
        for d in [2, 3, 10] {
            let r = reference_optimum(&Quadratic::identity(d), &FeasibleSet::simplex(d)).unwrap();
            assert!((r.value - 0.5 / d as f64).abs() < 1e-12);
            assert!(r.certificate <= REFERENCE_TOL);
        }
    }

    #[test]
    fn logistic_reference_is_certified() {
        let ds = synthetic_classification(200, 10, 4, 2.0).unwrap();
        let f = Logistic::new(ds, 10.0).unwrap();
        let set = FeasibleSet::simplex(10);
        let r = reference_optimum(&f, &set).unwrap();
        assert!(r.certificate <= REFERENCE_TOL, "{r:?}");
        // no vertex does better
        for j in 0..10 {
            assert!(f.value(&vector::basis(10, j)) >= r.value - 1e-12);
        }
    }

    #[test]
    fn svm_has_no_reference() {
        let ds = synthetic_classification(20, 3, 0, 2.0).unwrap();
        let f = Svm::new(ds, 10.0).unwrap();
        assert!(reference_optimum(&f, &FeasibleSet::simplex(4)).is_none());
    }
}
