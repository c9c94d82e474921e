//! Numeric validators for the recursion lemma and the estimator error
//! envelopes.
//!
//! The lemma: if
//! `r_{k+1} ≤ (1 − β₀/(k+k₀)^{α₀}) r_k + Σ_i β_i/(k+k₀)^{α_i}`
//! then `r_k ≤ 2 Σ_i Q_i/(k+k₀)^{α_i−α₀}` with
//! `Q_{i*} = max{β_{i*}/β₀, r₀ k₀^{α_{i*}−α₀}}` and `Q_i = β_i/β₀` otherwise.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::estimators::{full_approximation, sega_point};
use crate::objectives::{Custom, Objective, Quadratic};
use crate::oracle::{NoiseModel, ZeroOrderOracle};
use crate::rng::{Stream, Streams};

#[derive(Debug, Clone, PartialEq)]
pub struct RecursionSpec {
    pub alpha0: f64,
    pub beta0: f64,
    pub k0: u64,
    /// `(α_i, β_i)`; the first term plays the role of `i*`.
    pub terms: Vec<(f64, f64)>,
    pub r0: f64,
    pub horizon: usize,
}

impl RecursionSpec {
    /// Checks the lemma's hypotheses, plus `β₀ ≤ k₀^{α₀}` so the contraction
    /// factor is non-negative for every `k`.
    pub fn check_admissible(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Inadmissible(msg));
        if !(0.0..=1.0).contains(&self.alpha0) {
            return bad(format!("alpha0 = {} must lie in [0, 1]", self.alpha0));
        }
        if self.beta0.is_nan() || self.beta0 <= 0.0 {
            return bad(format!("beta0 = {} must be > 0", self.beta0));
        }
        if self.k0 == 0 {
            return bad("k0 must be >= 1".into());
        }
        if self.terms.is_empty() {
            return bad("at least one term is required".into());
        }
        if let Some(&(a, b)) = self.terms.iter().find(|(a, b)| !a.is_finite() || b.is_nan() || *b < 0.0) {
            return bad(format!("term (alpha = {a}, beta = {b}) needs finite alpha and beta >= 0"));
        }
        if self.r0.is_nan() || self.r0 < 0.0 {
            return bad(format!("r0 = {} must be >= 0", self.r0));
        }
        let k0 = self.k0 as f64;
        if self.beta0 > k0.powf(self.alpha0) {
            return bad(format!(
                "contraction 1 - beta0/k0^alpha0 is negative (beta0 = {}, k0^alpha0 = {})",
                self.beta0,
                k0.powf(self.alpha0)
            ));
        }
        let spread = self.max_alpha() - self.alpha0;
        if self.alpha0 == 1.0 {
            let need = 2.0 * spread.max(1.0);
            if self.beta0 < need {
                return bad(format!("alpha0 = 1 needs beta0 >= {need}, got {}", self.beta0));
            }
        } else {
            let need = (2.0 / self.beta0 * spread.max(1.0)).powf(1.0 / (1.0 - self.alpha0));
            if k0 < need {
                return bad(format!("alpha0 < 1 needs k0 >= {need}, got {}", self.k0));
            }
        }
        Ok(())
    }

    fn max_alpha(&self) -> f64 {
        self.terms.iter().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max)
    }

    /// `Q_i`, with `i*` the first term.
    pub fn q(&self) -> Vec<f64> {
        let k0 = self.k0 as f64;
        self.terms
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| {
                let q = b / self.beta0;
                if i == 0 {
                    q.max(self.r0 * k0.powf(a - self.alpha0))
                } else {
                    q
                }
            })
            .collect()
    }

    /// `2 Σ_i Q_i/(k+k₀)^{α_i−α₀}`.
    pub fn bound(&self, k: usize) -> f64 {
        let base = (k as u64 + self.k0) as f64;
        let q = self.q();
        2.0 * self
            .terms
            .iter()
            .zip(&q)
            .map(|(&(a, _), q)| q / base.powf(a - self.alpha0))
            .sum::<f64>()
    }

    /// Random admissible spec with 1–3 terms.
    pub fn random(rng: &mut impl Rng, horizon: usize) -> Self {
        loop {
            let alpha0 = if rng.random_bool(0.3) { 1.0 } else { rng.random_range(0.0..1.0) };
            let m = rng.random_range(1..=3);
            let terms: Vec<(f64, f64)> = (0..m)
                .map(|_| {
                    let a = alpha0 + rng.random_range(-0.5..3.0);
                    let b = 10f64.powf(rng.random_range(-2.0..1.0));
                    (a, b)
                })
                .collect();
            let spread = terms.iter().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max) - alpha0;
            let k0: u64 = rng.random_range(1..=500);
            let hi = (k0 as f64).powf(alpha0);
            let lo = if alpha0 == 1.0 {
                2.0 * spread.max(1.0)
            } else {
                2.0 * spread.max(1.0) / (k0 as f64).powf(1.0 - alpha0)
            };
            if lo > hi {
                continue;
            }
            let beta0 = rng.random_range(lo..=hi);
            let r0 = if rng.random_bool(0.2) { 0.0 } else { 10f64.powf(rng.random_range(-3.0..2.0)) };
            let spec = Self {
                alpha0,
                beta0,
                k0,
                terms,
                r0,
                horizon,
            };
            if spec.check_admissible().is_ok() {
                return spec;
            }
        }
    }
}

/// The recurrence taken with equality, `r_0 ..= r_horizon`.
pub fn simulate_recursion(spec: &RecursionSpec) -> Result<Vec<f64>> {
    spec.check_admissible()?;
    let mut r = Vec::with_capacity(spec.horizon + 1);
    r.push(spec.r0);
    for k in 0..spec.horizon {
        let base = (k as u64 + spec.k0) as f64;
        let drive: f64 = spec.terms.iter().map(|&(a, b)| b / base.powf(a)).sum();
        let next = (1.0 - spec.beta0 / base.powf(spec.alpha0)) * r[k] + drive;
        r.push(next);
    }
    Ok(r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaCheck {
    pub holds: bool,
    /// `min_k bound_k / r_k` over `r_k > 0`; infinite if every `r_k` is zero.
    pub min_ratio: f64,
    pub first_violation: Option<usize>,
}

/// Relative slack for floating-point rounding in the bound comparison.
const BOUND_SLACK: f64 = 1e-12;

pub fn check_lemma_bound(spec: &RecursionSpec, r: &[f64]) -> LemmaCheck {
    let mut min_ratio = f64::INFINITY;
    let mut first_violation = None;
    for (k, &rk) in r.iter().enumerate() {
        let b = spec.bound(k);
        if rk > 0.0 {
            min_ratio = min_ratio.min(b / rk);
        }
        if rk > b * (1.0 + BOUND_SLACK) && first_violation.is_none() {
            first_violation = Some(k);
        }
    }
    LemmaCheck {
        holds: first_violation.is_none(),
        min_ratio,
        first_violation,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecursionSuite {
    pub specs: usize,
    pub violations: usize,
    pub min_ratio: f64,
}

/// Simulates `count` random admissible specs and checks the bound on each.
pub fn recursion_suite(seed: u64, count: usize, horizon: usize) -> Result<RecursionSuite> {
    let mut rng = Streams::new(seed).rng(Stream::Harness);
    let mut suite = RecursionSuite {
        specs: count,
        violations: 0,
        min_ratio: f64::INFINITY,
    };
    for _ in 0..count {
        let spec = RecursionSpec::random(&mut rng, horizon);
        let r = simulate_recursion(&spec)?;
        let check = check_lemma_bound(&spec, &r);
        suite.violations += usize::from(!check.holds);
        suite.min_ratio = suite.min_ratio.min(check.min_ratio);
    }
    Ok(suite)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarlo {
    pub mean: Vec<f64>,
    pub std_err: Vec<f64>,
    pub target: Vec<f64>,
}

impl MonteCarlo {
    /// Largest `|mean − target|` in units of standard error; zero-variance
    /// coordinates must match exactly up to `1e-12`.
    pub fn max_z(&self) -> f64 {
        self.mean
            .iter()
            .zip(&self.std_err)
            .zip(&self.target)
            .map(|((m, s), t)| {
                let dev = (m - t).abs();
                if *s > 0.0 {
                    dev / s
                } else if dev <= 1e-12 * t.abs().max(1.0) {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Mean of the SEGA point over `draws` index draws with memory `h` at `x`,
/// against the full approximation at `x`.
pub fn sega_unbiasedness(
    objective: Arc<dyn Objective>,
    x: &[f64],
    h: &[f64],
    tau: f64,
    draws: usize,
    seed: u64,
) -> Result<MonteCarlo> {
    let d = x.len();
    let mut oracle = ZeroOrderOracle::new(objective, NoiseModel::None, seed);
    let target = full_approximation(&mut oracle, x, tau)?;
    let mut rng = Streams::new(seed).rng(Stream::Estimator);
    let mut sum = vec![0.0; d];
    let mut sum_sq = vec![0.0; d];
    for _ in 0..draws {
        let i = rng.random_range(0..d);
        let diff = oracle.central_difference(x, i, tau, None)?;
        let rho = sega_point(h, i, diff);
        for j in 0..d {
            sum[j] += rho[j];
            sum_sq[j] += rho[j] * rho[j];
        }
    }
    let n = draws as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let std_err = sum_sq
        .iter()
        .zip(&mean)
        .map(|(s2, m)| ((s2 / n - m * m).max(0.0) * n / (n - 1.0) / n).sqrt())
        .collect();
    Ok(MonteCarlo { mean, std_err, target })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Full-approximation error `‖∇̃f(x) − ∇f(x)‖` at each `τ` for the cubic
/// `f(x) = Σ c_j x_j³`.
pub fn full_approximation_errors(c: &[f64], x: &[f64], taus: &[f64]) -> Result<Vec<f64>> {
    let cc = c.to_vec();
    let f: Arc<dyn Objective> = Arc::new(Custom::new(c.len(), move |x| {
        x.iter().zip(&cc).map(|(v, c)| c * v * v * v).sum()
    }));
    let grad: Vec<f64> = c.iter().zip(x).map(|(c, v)| 3.0 * c * v * v).collect();
    let mut oracle = ZeroOrderOracle::new(f, NoiseModel::None, 0);
    taus.iter()
        .map(|&tau| {
            let est = full_approximation(&mut oracle, x, tau)?;
            Ok(crate::vector::dist(&est, &grad))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Runs the recursion suite, the worked recursion example, SEGA
/// unbiasedness and the full-approximation `τ²` slope.
pub fn validate_all(seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();

    let suite = recursion_suite(seed, 1000, 10_000)?;
    out.push(CheckOutcome {
        name: "recursion-lemma",
        passed: suite.violations == 0,
        detail: format!(
            "{} specs, {} violations, min bound/r ratio {:.4}",
            suite.specs, suite.violations, suite.min_ratio
        ),
    });

    let example = RecursionSpec {
        alpha0: 1.0,
        beta0: 4.0,
        k0: 8,
        terms: vec![(2.0, 1.0)],
        r0: 0.0,
        horizon: 1,
    };
    let r = simulate_recursion(&example)?;
    out.push(CheckOutcome {
        name: "recursion-example",
        passed: r[1] == 1.0 / 64.0 && example.bound(0) == 0.0625,
        detail: format!("r1 = {}, bound(0) = {}", r[1], example.bound(0)),
    });

    let d = 10;
    let diag: Vec<f64> = (1..=d).map(|j| j as f64).collect();
    let q: Arc<dyn Objective> = Arc::new(Quadratic::diagonal(diag, vec![1.0; d])?);
    let x: Vec<f64> = (0..d).map(|j| 0.1 * j as f64 - 0.3).collect();
    let h: Vec<f64> = (0..d).map(|j| (j as f64).sin()).collect();
    let mc = sega_unbiasedness(q, &x, &h, 1e-3, 100_000, seed)?;
    let z = mc.max_z();
    out.push(CheckOutcome {
        name: "sega-unbiasedness",
        passed: z <= 3.0,
        detail: format!("max |mean - target| = {z:.3} standard errors"),
    });

    let c: Vec<f64> = (0..5).map(|j| 1.0 + j as f64).collect();
    let taus = [1e-1, 1e-2, 1e-3, 1e-4];
    let errs = full_approximation_errors(&c, &[0.7; 5], &taus)?;
    let slope = log_log_slope(&taus, &errs);
    out.push(CheckOutcome {
        name: "full-approximation-slope",
        passed: (slope - 2.0).abs() <= 0.2,
        detail: format!("log-log slope {slope:.4}"),
    });

    Ok(out)
}
