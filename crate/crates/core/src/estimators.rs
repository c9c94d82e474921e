//! Zero-order gradient estimators.
//!
//! * coordinate estimates over `m` random coordinates, and the
//!   full approximation at `m = d` (`2m` calls);
//! * `l_p`-smoothing along a random direction on the unit `l_p` sphere
//!   (`2·batch` calls);
//! * JAGUAR: a per-coordinate memory `h` refreshed at one uniformly drawn
//!   coordinate per step (2 calls), plus the stochastic variant that also
//!   forms the SEGA point `ρ` and the momentum aggregate `g`.

use std::str::FromStr;

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{check_dim, positive, Error, Result};
use crate::oracle::ZeroOrderOracle;

/// Smoothing parameter used when nothing better is known.
pub const DEFAULT_TAU: f64 = 1e-3;

/// `τ = ε / (√d·L·D)` when the target accuracy, smoothness and diameter
/// are all known, otherwise [`DEFAULT_TAU`].
pub fn default_tau(d: usize, epsilon: Option<f64>, l: Option<f64>, diameter: Option<f64>) -> f64 {
    match (epsilon, l, diameter) {
        (Some(eps), Some(l), Some(dm)) if eps > 0.0 && l > 0.0 && dm > 0.0 && dm.is_finite() => {
            eps / ((d as f64).sqrt() * l * dm)
        }
        _ => DEFAULT_TAU,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SphereNorm {
    L1,
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimatorKind {
    Jaguar,
    /// `m` random coordinates scaled by `d/m`; `m = d` is the full approximation.
    FullCoordinate { m: usize },
    LpSmoothing { norm: SphereNorm, batch: usize },
    JaguarStochastic,
}

impl EstimatorKind {
    /// `jaguar`, `jaguar_stochastic`, `full`, `coord:<m>`, `l2smooth[:<batch>]`,
    /// `l1smooth[:<batch>]`. `d` resolves `full`.
    pub fn parse(s: &str, d: usize) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let int = |a: Option<&str>, default: usize| -> Result<usize> {
            a.map_or(Ok(default), |v| {
                v.parse()
                    .map_err(|_| Error::Config(format!("invalid estimator argument in `{s}`")))
            })
        };
        let kind = match name {
            "jaguar" => Self::Jaguar,
            "jaguar_stochastic" => Self::JaguarStochastic,
            "full" => Self::FullCoordinate { m: d },
            "coord" => Self::FullCoordinate { m: int(arg, d)? },
            "l2smooth" => Self::LpSmoothing {
                norm: SphereNorm::L2,
                batch: int(arg, 1)?,
            },
            "l1smooth" => Self::LpSmoothing {
                norm: SphereNorm::L1,
                batch: int(arg, 1)?,
            },
            _ => return Err(Error::Config(format!("unknown estimator `{s}`"))),
        };
        kind.validate(d)?;
        Ok(kind)
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        match *self {
            Self::FullCoordinate { m } if m == 0 || m > d => Err(Error::InvalidParameter {
                name: "m",
                value: m as f64,
                reason: "must lie in [1, d]",
            }),
            Self::LpSmoothing { batch: 0, .. } => Err(Error::InvalidParameter {
                name: "batch",
                value: 0.0,
                reason: "must be >= 1",
            }),
            _ => Ok(()),
        }
    }

    /// Oracle calls spent before the first iteration.
    pub fn init_calls(&self, d: usize) -> u64 {
        match self {
            Self::Jaguar | Self::JaguarStochastic => 2 * d as u64,
            _ => 0,
        }
    }

    pub fn calls_per_iteration(&self) -> u64 {
        match *self {
            Self::Jaguar | Self::JaguarStochastic => 2,
            Self::FullCoordinate { m } => 2 * m as u64,
            Self::LpSmoothing { batch, .. } => 2 * batch as u64,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Self::Jaguar => "jaguar".into(),
            Self::JaguarStochastic => "jaguar_stochastic".into(),
            Self::FullCoordinate { m } => format!("coord:{m}"),
            Self::LpSmoothing { norm, batch } => {
                let p = if norm == SphereNorm::L1 { 1 } else { 2 };
                format!("l{p}smooth:{batch}")
            }
        }
    }
}

impl FromStr for SphereNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" | "l1" => Ok(Self::L1),
            "2" | "l2" => Ok(Self::L2),
            _ => Err(Error::Config(format!("unknown sphere norm `{s}`"))),
        }
    }
}

/// `∇̃f_δ(x) = Σ_i (f_δ(x+τe_i) − f_δ(x−τe_i))/(2τ) e_i`, visiting every
/// coordinate in order. Stochastic oracles draw a fresh pair per coordinate.
pub fn full_approximation(oracle: &mut ZeroOrderOracle, x: &[f64], tau: f64) -> Result<Vec<f64>> {
    positive("tau", tau)?;
    check_dim(oracle.dim(), x.len())?;
    (0..x.len())
        .map(|i| {
            let pair = oracle.draw_pair();
            oracle.central_difference(x, i, tau, pair.as_ref())
        })
        .collect()
}

/// `(d/m) Σ_{i∈I} ∇̃_i f_δ(x) e_i` over a uniform `m`-subset `I`.
pub fn full_coordinate_estimate(
    oracle: &mut ZeroOrderOracle,
    x: &[f64],
    tau: f64,
    m: usize,
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    let d = oracle.dim();
    EstimatorKind::FullCoordinate { m }.validate(d)?;
    if m == d {
        return full_approximation(oracle, x, tau);
    }
    positive("tau", tau)?;
    check_dim(d, x.len())?;
    let mut coords = rand::seq::index::sample(rng, d, m).into_vec();
    coords.sort_unstable();
    let scale = d as f64 / m as f64;
    let mut est = vec![0.0; d];
    for i in coords {
        let pair = oracle.draw_pair();
        est[i] = scale * oracle.central_difference(x, i, tau, pair.as_ref())?;
    }
    Ok(est)
}

/// Uniform draw from the unit sphere of the given norm. `l2`: normalized
/// Gaussian. `l1`: i.i.d. Exp(1) magnitudes with random signs, normalized.
pub fn sample_sphere(norm: SphereNorm, d: usize, rng: &mut impl Rng) -> Vec<f64> {
    match norm {
        SphereNorm::L2 => loop {
            let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let n = crate::vector::norm(&z);
            if n > 0.0 {
                break z.into_iter().map(|v| v / n).collect();
            }
        },
        SphereNorm::L1 => loop {
            let z: Vec<f64> = (0..d)
                .map(|_| {
                    let e: f64 = rng.sample(Exp1);
                    if rng.random_bool(0.5) {
                        e
                    } else {
                        -e
                    }
                })
                .collect();
            let n: f64 = z.iter().map(|v| v.abs()).sum();
            if n > 0.0 {
                break z.into_iter().map(|v| v / n).collect();
            }
        },
    }
}

/// Average over `batch` directions `e` of `d·(f_δ(x+τe) − f_δ(x−τe))/(2τ)·e`.
pub fn lp_smoothing_estimate(
    oracle: &mut ZeroOrderOracle,
    x: &[f64],
    tau: f64,
    norm: SphereNorm,
    batch: usize,
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    positive("tau", tau)?;
    let d = oracle.dim();
    check_dim(d, x.len())?;
    EstimatorKind::LpSmoothing { norm, batch }.validate(d)?;
    let mut est = vec![0.0; d];
    for _ in 0..batch {
        let e = sample_sphere(norm, d, rng);
        let pair = oracle.draw_pair();
        let diff = oracle.directional_difference(x, &e, tau, pair.as_ref())?;
        let coef = d as f64 * diff / batch as f64;
        for (g, ei) in est.iter_mut().zip(&e) {
            *g += coef * ei;
        }
    }
    Ok(est)
}

/// SEGA point `ρ = h − d⟨h, e_i⟩e_i + d·∇̃_i f_δ e_i` built from the memory
/// *before* its coordinate `i` is refreshed.
pub fn sega_point(h_pre: &[f64], i: usize, diff: f64) -> Vec<f64> {
    let d = h_pre.len() as f64;
    let mut rho = h_pre.to_vec();
    rho[i] = h_pre[i] - d * h_pre[i] + d * diff;
    rho
}

/// JAGUAR memory `h`, and the momentum aggregate `g` in the stochastic case.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    h: Vec<f64>,
    g: Option<Vec<f64>>,
    tau: f64,
    last_index: Option<usize>,
}

impl EstimatorState {
    /// `h⁰ = ∇̃f_δ(x⁰)`; costs `2d` calls.
    pub fn init(oracle: &mut ZeroOrderOracle, x0: &[f64], tau: f64) -> Result<Self> {
        let h = full_approximation(oracle, x0, tau)?;
        Ok(Self {
            h,
            g: None,
            tau,
            last_index: None,
        })
    }

    /// `h⁰ = g⁰ = ∇̃f_δ(x⁰, ξ±)`; costs `2d` calls.
    pub fn init_stochastic(oracle: &mut ZeroOrderOracle, x0: &[f64], tau: f64) -> Result<Self> {
        let mut state = Self::init(oracle, x0, tau)?;
        state.g = Some(state.h.clone());
        Ok(state)
    }

    /// State with a given memory, e.g. to study the estimator from a known
    /// starting error.
    pub fn from_memory(h: Vec<f64>, g: Option<Vec<f64>>, tau: f64) -> Result<Self> {
        positive("tau", tau)?;
        if let Some(g) = &g {
            check_dim(h.len(), g.len())?;
        }
        Ok(Self {
            h,
            g,
            tau,
            last_index: None,
        })
    }

    pub fn memory(&self) -> &[f64] {
        &self.h
    }

    pub fn momentum(&self) -> Option<&[f64]> {
        self.g.as_deref()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn last_index(&self) -> Option<usize> {
        self.last_index
    }

    fn refresh(&mut self, i: usize, diff: f64) {
        self.h[i] = diff;
        self.last_index = Some(i);
    }

    /// One deterministic JAGUAR step at `x`: draw `i` uniformly, overwrite
    /// `h_i` with the central difference. Two oracle calls.
    pub fn jaguar_step(
        &mut self,
        oracle: &mut ZeroOrderOracle,
        x: &[f64],
        rng: &mut impl Rng,
    ) -> Result<&[f64]> {
        check_dim(self.h.len(), x.len())?;
        let i = rng.random_range(0..self.h.len());
        let pair = oracle.draw_pair();
        let diff = oracle.central_difference(x, i, self.tau, pair.as_ref())?;
        self.refresh(i, diff);
        Ok(&self.h)
    }

    /// One stochastic JAGUAR step: one central difference with `(ξ⁺, ξ⁻)`
    /// feeds both the memory refresh and the SEGA point, then
    /// `g ← (1−η)g + ηρ`. Returns `g`. Two oracle calls.
    pub fn jaguar_stochastic_step(
        &mut self,
        oracle: &mut ZeroOrderOracle,
        x: &[f64],
        rng: &mut impl Rng,
        eta: f64,
    ) -> Result<&[f64]> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "eta",
                value: eta,
                reason: "must lie in (0, 1]",
            });
        }
        check_dim(self.h.len(), x.len())?;
        if self.g.is_none() {
            return Err(Error::Config("momentum aggregate not initialized".into()));
        }
        let i = rng.random_range(0..self.h.len());
        let pair = oracle.draw_pair();
        let diff = oracle.central_difference(x, i, self.tau, pair.as_ref())?;
        let rho = sega_point(&self.h, i, diff);
        self.refresh(i, diff);
        let g = self.g.as_mut().expect("checked above");
        momentum_update(g, &rho, eta);
        Ok(g)
    }
}

/// `g ← (1 − η)g + ηρ`.
pub fn momentum_update(g: &mut [f64], rho: &[f64], eta: f64) {
    for (gi, ri) in g.iter_mut().zip(rho) {
        *gi = (1.0 - eta) * *gi + eta * ri;
    }
}

/// Estimator in use by a solver, behind one interface so the baselines can
/// stand in for the JAGUAR update.
#[derive(Debug, Clone)]
pub enum GradientEstimator {
    Jaguar(EstimatorState),
    FullCoordinate { m: usize, tau: f64, last: Option<Vec<f64>> },
    LpSmoothing {
        norm: SphereNorm,
        batch: usize,
        tau: f64,
        last: Option<Vec<f64>>,
    },
}

impl GradientEstimator {
    /// Performs any initialization the estimator needs at `x0`.
    /// `JaguarStochastic` is driven by the stochastic solver directly.
    pub fn init(kind: EstimatorKind, oracle: &mut ZeroOrderOracle, x0: &[f64], tau: f64) -> Result<Self> {
        positive("tau", tau)?;
        kind.validate(oracle.dim())?;
        match kind {
            EstimatorKind::Jaguar => Ok(Self::Jaguar(EstimatorState::init(oracle, x0, tau)?)),
            EstimatorKind::FullCoordinate { m } => Ok(Self::FullCoordinate { m, tau, last: None }),
            EstimatorKind::LpSmoothing { norm, batch } => Ok(Self::LpSmoothing {
                norm,
                batch,
                tau,
                last: None,
            }),
            EstimatorKind::JaguarStochastic => Err(Error::Config(
                "jaguar_stochastic is only available through the stochastic Frank-Wolfe solver".into(),
            )),
        }
    }

    /// Current gradient estimate, if one has been formed.
    pub fn current(&self) -> Option<&[f64]> {
        match self {
            Self::Jaguar(s) => Some(s.memory()),
            Self::FullCoordinate { last, .. } | Self::LpSmoothing { last, .. } => last.as_deref(),
        }
    }

    pub fn estimate(
        &mut self,
        oracle: &mut ZeroOrderOracle,
        x: &[f64],
        rng: &mut impl Rng,
    ) -> Result<&[f64]> {
        match self {
            Self::Jaguar(state) => state.jaguar_step(oracle, x, rng),
            Self::FullCoordinate { m, tau, last } => {
                Ok(last.insert(full_coordinate_estimate(oracle, x, *tau, *m, rng)?))
            }
            Self::LpSmoothing {
                norm,
                batch,
                tau,
                last,
            } => Ok(last.insert(lp_smoothing_estimate(oracle, x, *tau, *norm, *batch, rng)?)),
        }
    }
}
