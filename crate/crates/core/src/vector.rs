//! Small dense-vector helpers over `[f64]`.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Standard basis vector `e_i` in `R^d`.
pub fn basis(d: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; d];
    e[i] = 1.0;
    e
}

/// `x <- x + gamma * (s - x)`, the Frank-Wolfe convex step.
pub fn convex_step(x: &mut [f64], s: &[f64], gamma: f64) {
    for (xi, si) in x.iter_mut().zip(s) {
        *xi += gamma * (si - *xi);
    }
}

/// `x <- x - gamma * g`.
pub fn descent_step(x: &mut [f64], g: &[f64], gamma: f64) {
    for (xi, gi) in x.iter_mut().zip(g) {
        *xi -= gamma * gi;
    }
}
