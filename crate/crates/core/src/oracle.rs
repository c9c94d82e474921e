//! Counted, noise-wrapped zero-order access to an objective.
//!
//! [`ZeroOrderOracle`] is the only path through which solvers and estimators
//! evaluate an objective. Every scalar evaluation increments the call counter
//! before the objective runs.

use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{check_dim, positive, Error, Result};
use crate::objectives::{Objective, StochasticView};
use crate::rng::{Stream, Streams};

/// Additive oracle noise δ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    None,
    /// Round to the nearest multiple of `10^-decimals`, ties away from zero.
    Round { decimals: i32 },
    /// `N(0, σ²)` draws. In deterministic feedback every call draws fresh
    /// noise; in one-/two-point feedback the draw belongs to the sample ξ.
    Gaussian { sigma: f64 },
}

impl NoiseModel {
    pub const DEFAULT_SIGMA: f64 = 0.1;

    pub fn gaussian(sigma: f64) -> Result<Self> {
        if sigma >= 0.0 && sigma.is_finite() {
            Ok(Self::Gaussian { sigma })
        } else {
            Err(Error::InvalidParameter {
                name: "sigma",
                value: sigma,
                reason: "must be finite and >= 0",
            })
        }
    }

    /// Uniform bound `Δ` on `|δ(x)|`, when one exists. Gaussian noise is
    /// unbounded and returns `None`.
    pub fn bound(&self) -> Option<f64> {
        match *self {
            Self::None => Some(0.0),
            Self::Round { decimals } => Some(0.5 * 10f64.powi(-decimals)),
            Self::Gaussian { sigma } => (sigma == 0.0).then_some(0.0),
        }
    }
}

/// `round(v, p)`: nearest multiple of `10^-p`, ties away from zero.
pub fn round_to_decimals(v: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    (v * scale).round() / scale
}

impl FromStr for NoiseModel {
    type Err = Error;

    /// `none`, `round:<decimals>`, `gaussian` or `gaussian:<sigma>`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let bad = || Error::Config(format!("invalid noise model `{s}`"));
        match (kind, arg) {
            ("none", None) => Ok(Self::None),
            ("round", Some(p)) => Ok(Self::Round {
                decimals: p.parse().map_err(|_| bad())?,
            }),
            ("gaussian", None) => Self::gaussian(Self::DEFAULT_SIGMA),
            ("gaussian", Some(v)) => Self::gaussian(v.parse().map_err(|_| bad())?),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feedback {
    /// `f_δ(x)`: no sample.
    Deterministic,
    /// Independent samples at the two probe points.
    OnePoint,
    /// The same sample at both probe points.
    TwoPoint,
}

impl FromStr for Feedback {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "deterministic" | "none" => Ok(Self::Deterministic),
            "one_point" | "opf" => Ok(Self::OnePoint),
            "two_point" | "tpf" => Ok(Self::TwoPoint),
            _ => Err(Error::Config(format!("unknown feedback `{s}`"))),
        }
    }
}

/// One realization of ξ: its noise draw and, for minibatch objectives, the
/// batch of component indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    id: u64,
    xi: f64,
    batch: Option<Arc<[usize]>>,
}

impl Sample {
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn noise(&self) -> f64 {
        self.xi
    }

    pub fn batch(&self) -> Option<&[usize]> {
        self.batch.as_deref()
    }
}

/// Samples `(ξ⁺, ξ⁻)` for the two probe points of a finite difference.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePair {
    pub plus: Sample,
    pub minus: Sample,
}

impl SamplePair {
    pub fn is_shared(&self) -> bool {
        self.plus.id == self.minus.id
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CallStats {
    /// Total scalar evaluations.
    pub calls: u64,
    /// Central differences taken (two evaluations each).
    pub differences: u64,
    /// Evaluations requested directly through [`ZeroOrderOracle::eval`].
    pub direct: u64,
}

pub struct ZeroOrderOracle {
    objective: Arc<dyn Objective>,
    view: Option<StochasticView>,
    noise: NoiseModel,
    feedback: Feedback,
    stats: CallStats,
    noise_rng: ChaCha8Rng,
    sample_rng: ChaCha8Rng,
    batch_rng: ChaCha8Rng,
    next_sample: u64,
    probe: Vec<f64>,
}

impl std::fmt::Debug for ZeroOrderOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ZeroOrderOracle")
            .field("objective", &self.objective.kind())
            .field("noise", &self.noise)
            .field("feedback", &self.feedback)
            .field("stats", &self.stats)
            .finish()
    }
}

impl ZeroOrderOracle {
    /// A deterministic-feedback oracle whose random streams derive from `seed`.
    pub fn new(objective: Arc<dyn Objective>, noise: NoiseModel, seed: u64) -> Self {
        let streams = Streams::new(seed);
        let d = objective.dim();
        Self {
            objective,
            view: None,
            noise,
            feedback: Feedback::Deterministic,
            stats: CallStats::default(),
            noise_rng: streams.rng(Stream::OracleNoise),
            sample_rng: streams.rng(Stream::Sample),
            batch_rng: streams.rng(Stream::Minibatch),
            next_sample: 0,
            probe: vec![0.0; d],
        }
    }

    pub fn with_feedback(mut self, feedback: Feedback) -> Self {
        self.feedback = feedback;
        self
    }

    /// Samples carry a uniform minibatch of `batch_size` components.
    /// Requires non-deterministic feedback and a finite-sum objective.
    pub fn with_minibatch(mut self, batch_size: usize) -> Result<Self> {
        if self.feedback == Feedback::Deterministic {
            return Err(Error::Config(
                "minibatch sampling needs one_point or two_point feedback".into(),
            ));
        }
        self.view = Some(StochasticView::new(self.objective.clone(), batch_size)?);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }

    pub fn feedback(&self) -> Feedback {
        self.feedback
    }

    pub fn is_stochastic(&self) -> bool {
        self.feedback != Feedback::Deterministic
    }

    pub fn calls(&self) -> u64 {
        self.stats.calls
    }

    pub fn stats(&self) -> CallStats {
        self.stats
    }

    /// Draws a fresh sample ξ, or `None` in deterministic feedback.
    pub fn draw_sample(&mut self) -> Option<Sample> {
        if !self.is_stochastic() {
            return None;
        }
        let xi = match self.noise {
            NoiseModel::Gaussian { sigma } if sigma > 0.0 => {
                Normal::new(0.0, sigma).expect("sigma validated").sample(&mut self.sample_rng)
            }
            _ => 0.0,
        };
        let batch = self.view.as_ref().map(|v| v.sample(&mut self.batch_rng).into());
        let id = self.next_sample;
        self.next_sample += 1;
        Some(Sample { id, xi, batch })
    }

    /// Draws `(ξ⁺, ξ⁻)`: independent for one-point feedback, identical for
    /// two-point feedback, `None` in deterministic feedback.
    pub fn draw_pair(&mut self) -> Option<SamplePair> {
        match self.feedback {
            Feedback::Deterministic => None,
            Feedback::TwoPoint => {
                let s = self.draw_sample()?;
                Some(SamplePair {
                    plus: s.clone(),
                    minus: s,
                })
            }
            Feedback::OnePoint => {
                let plus = self.draw_sample()?;
                let minus = self.draw_sample()?;
                Some(SamplePair { plus, minus })
            }
        }
    }

    /// `f_δ(x)` or `f_δ(x, ξ)`.
    pub fn eval(&mut self, x: &[f64], sample: Option<&Sample>) -> Result<f64> {
        let v = self.evaluate(x, sample)?;
        self.stats.direct += 1;
        Ok(v)
    }

    /// `(f_δ(x + τe_i, ξ⁺) − f_δ(x − τe_i, ξ⁻)) / 2τ`; two oracle calls.
    pub fn central_difference(
        &mut self,
        x: &[f64],
        i: usize,
        tau: f64,
        pair: Option<&SamplePair>,
    ) -> Result<f64> {
        positive("tau", tau)?;
        check_dim(self.dim(), x.len())?;
        if i >= x.len() {
            return Err(Error::InvalidParameter {
                name: "coordinate",
                value: i as f64,
                reason: "must be < d",
            });
        }
        let mut probe = std::mem::take(&mut self.probe);
        probe.copy_from_slice(x);
        probe[i] = x[i] + tau;
        let plus = self.evaluate(&probe, pair.map(|p| &p.plus));
        probe[i] = x[i] - tau;
        let minus = self.evaluate(&probe, pair.map(|p| &p.minus));
        self.probe = probe;
        let diff = (plus? - minus?) / (2.0 * tau);
        self.stats.differences += 1;
        Ok(diff)
    }

    /// Central difference along an arbitrary direction `e`:
    /// `(f_δ(x + τe) − f_δ(x − τe)) / 2τ`; two oracle calls.
    pub fn directional_difference(
        &mut self,
        x: &[f64],
        e: &[f64],
        tau: f64,
        pair: Option<&SamplePair>,
    ) -> Result<f64> {
        positive("tau", tau)?;
        check_dim(self.dim(), x.len())?;
        check_dim(self.dim(), e.len())?;
        let mut probe = std::mem::take(&mut self.probe);
        for ((p, xi), ei) in probe.iter_mut().zip(x).zip(e) {
            *p = xi + tau * ei;
        }
        let plus = self.evaluate(&probe, pair.map(|p| &p.plus));
        for ((p, xi), ei) in probe.iter_mut().zip(x).zip(e) {
            *p = xi - tau * ei;
        }
        let minus = self.evaluate(&probe, pair.map(|p| &p.minus));
        self.probe = probe;
        let diff = (plus? - minus?) / (2.0 * tau);
        self.stats.differences += 1;
        Ok(diff)
    }

    fn evaluate(&mut self, x: &[f64], sample: Option<&Sample>) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        match (self.is_stochastic(), sample) {
            (true, None) => return Err(Error::MissingSample),
            (false, Some(_)) => return Err(Error::UnexpectedSample),
            _ => {}
        }
        self.stats.calls += 1;
        let raw = match (&self.view, sample.and_then(Sample::batch)) {
            (Some(view), Some(batch)) => view.value(x, batch)?,
            (Some(_), None) => return Err(Error::MissingSample),
            (None, _) => self.objective.value(x),
        };
        if !raw.is_finite() {
            return Err(Error::NonFinite {
                call: self.stats.calls,
            });
        }
        Ok(match self.noise {
            NoiseModel::None => raw,
            NoiseModel::Round { decimals } => round_to_decimals(raw, decimals),
            NoiseModel::Gaussian { sigma } => match sample {
                Some(s) => raw + s.xi,
                None if sigma > 0.0 => raw + self.noise_rng.sample::<f64, _>(Normal::new(0.0, sigma).expect("sigma validated")),
                None => raw,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{Custom, Quadratic};

    fn sq_norm() -> Arc<dyn Objective> {
        Arc::new(Custom::new(2, |x| x.iter().map(|v| v * v).sum()))
    }

    #[test]
    fn exact_evaluation_counts_calls() {
        let mut o = ZeroOrderOracle::new(sq_norm(), NoiseModel::None, 0);
        assert_eq!(o.eval(&[1.0, 2.0], None).unwrap(), 5.0);
        assert_eq!(o.calls(), 1);
    }

    #[test]
    fn rounding_noise() {
        assert_eq!(round_to_decimals(0.1234567, 5), 0.12346);
        assert_eq!(round_to_decimals(2.5, 0), 3.0);
        assert_eq!(round_to_decimals(-2.5, 0), -3.0);
        let f: Arc<dyn Objective> = Arc::new(Custom::new(1, |_| 0.1234567));
        let mut o = ZeroOrderOracle::new(f, NoiseModel::Round { decimals: 5 }, 0);
        assert_eq!(o.eval(&[0.0], None).unwrap(), 0.12346);
    }

    #[test]
    fn rounding_noise_is_bounded() {
        let bound = NoiseModel::Round { decimals: 5 }.bound().unwrap();
        let f: Arc<dyn Objective> = Arc::new(Custom::new(1, |x| (x[0] * 7.3).sin() * 3.0 + x[0]));
        let mut o = ZeroOrderOracle::new(f.clone(), NoiseModel::Round { decimals: 5 }, 0);
        for k in 0..10_000 {
            let x = [k as f64 * 1e-3 - 5.0];
            let delta = o.eval(&x, None).unwrap() - f.value(&x);
            assert!(delta.abs() <= bound * (1.0 + 1e-9), "{delta}");
        }
    }

    #[test]
    fn gaussian_noise_is_seed_reproducible() {
        let run = |seed| {
            let mut o = ZeroOrderOracle::new(sq_norm(), NoiseModel::gaussian(0.1).unwrap(), seed);
            (0..50).map(|_| o.eval(&[1.0, 2.0], None).unwrap().to_bits()).collect::<Vec<_>>()
        };
        assert_eq!(run(9), run(9));
        assert_ne!(run(9), run(10));
        assert!(run(9).iter().any(|&b| f64::from_bits(b) != 5.0));
    }

    #[test]
    fn central_difference_examples() {
        let mut o = ZeroOrderOracle::new(sq_norm(), NoiseModel::None, 0);
        assert!((o.central_difference(&[1.0, 2.0], 0, 0.1, None).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(o.calls(), 2);

        let c: Arc<dyn Objective> = Arc::new(Custom::new(3, |_| 4.2));
        let mut o = ZeroOrderOracle::new(c, NoiseModel::None, 0);
        assert_eq!(o.central_difference(&[1.0, -3.0, 0.5], 2, 0.3, None).unwrap(), 0.0);

        let cubic: Arc<dyn Objective> = Arc::new(Custom::new(1, |x| x[0].powi(3)));
        let mut o = ZeroOrderOracle::new(cubic, NoiseModel::None, 0);
        // (1.1³ − 0.9³)/0.2 = 3 + τ²
        assert!((o.central_difference(&[1.0], 0, 0.1, None).unwrap() - 3.01).abs() < 1e-12);
    }

    #[test]
    fn central_difference_errors() {
        let mut o = ZeroOrderOracle::new(sq_norm(), NoiseModel::None, 0);
        assert!(o.central_difference(&[1.0, 2.0], 0, 0.0, None).is_err());
        assert!(o.central_difference(&[1.0, 2.0], 0, -1.0, None).is_err());
        assert!(o.central_difference(&[1.0, 2.0], 2, 0.1, None).is_err());
        assert!(matches!(o.eval(&[1.0], None), Err(Error::DimensionMismatch { .. })));
        assert_eq!(o.calls(), 0);
    }

    #[test]
    fn sample_presence_is_enforced() {
        let mut det = ZeroOrderOracle::new(sq_norm(), NoiseModel::None, 0);
        let mut sto = ZeroOrderOracle::new(sq_norm(), NoiseModel::None, 0).with_feedback(Feedback::OnePoint);
        let s = sto.draw_sample().unwrap();
        assert!(matches!(det.eval(&[0.0, 0.0], Some(&s)), Err(Error::UnexpectedSample)));
        assert!(matches!(sto.eval(&[0.0, 0.0], None), Err(Error::MissingSample)));
        assert!(det.draw_pair().is_none());
    }

    #[test]
    fn two_point_feedback_shares_the_sample() {
        let noise = NoiseModel::gaussian(0.1).unwrap();
        let mut tpf = ZeroOrderOracle::new(sq_norm(), noise, 4).with_feedback(Feedback::TwoPoint);
        let pair = tpf.draw_pair().unwrap();
        assert!(pair.is_shared());
        assert_eq!(pair.plus, pair.minus);
        // shared noise cancels in the difference
        let d = tpf.central_difference(&[1.0, 2.0], 1, 0.5, Some(&pair)).unwrap();
        assert!((d - 4.0).abs() < 1e-12);

        let mut opf = ZeroOrderOracle::new(sq_norm(), noise, 4).with_feedback(Feedback::OnePoint);
        let pair = opf.draw_pair().unwrap();
        assert!(!pair.is_shared());
        assert_ne!(pair.plus.noise(), pair.minus.noise());
    }

    #[test]
    fn minibatch_samples_reuse_batch_under_two_point() {
        let parts: Vec<Arc<dyn Objective>> = (0..6)
            .map(|k| Arc::new(Quadratic::diagonal(vec![1.0, 1.0], vec![k as f64, 0.0]).unwrap()) as Arc<dyn Objective>)
            .collect();
        let f: Arc<dyn Objective> = Arc::new(crate::objectives::FiniteSum::new(parts).unwrap());
        let mut o = ZeroOrderOracle::new(f.clone(), NoiseModel::None, 1)
            .with_feedback(Feedback::TwoPoint)
            .with_minibatch(2)
            .unwrap();
        let pair = o.draw_pair().unwrap();
        assert_eq!(pair.plus.batch().unwrap().len(), 2);
        assert_eq!(pair.plus.batch(), pair.minus.batch());
        assert!(ZeroOrderOracle::new(f, NoiseModel::None, 1).with_minibatch(2).is_err());
    }

    #[test]
    fn call_accounting_identity() {
        let mut o = ZeroOrderOracle::new(sq_norm(), NoiseModel::None, 0);
        for k in 0..7 {
            o.central_difference(&[0.5, 1.5], k % 2, 0.01, None).unwrap();
        }
        o.eval(&[0.0, 0.0], None).unwrap();
        o.directional_difference(&[0.0, 0.0], &[0.6, 0.8], 0.1, None).unwrap();
        let s = o.stats();
        assert_eq!(s.calls, 2 * s.differences + s.direct);
        assert_eq!((s.differences, s.direct), (8, 1));
    }

    #[test]
    fn non_finite_values_are_reported() {
        let f: Arc<dyn Objective> = Arc::new(Custom::new(1, |x| (x[0]).ln()));
        let mut o = ZeroOrderOracle::new(f, NoiseModel::None, 0);
        assert!(matches!(o.eval(&[-1.0], None), Err(Error::NonFinite { call: 1 })));
    }

    #[test]
    fn parses_noise_models() {
        assert_eq!("none".parse::<NoiseModel>().unwrap(), NoiseModel::None);
        assert_eq!("round:5".parse::<NoiseModel>().unwrap(), NoiseModel::Round { decimals: 5 });
        assert_eq!("gaussian".parse::<NoiseModel>().unwrap(), NoiseModel::Gaussian { sigma: 0.1 });
        assert!("gaussian:-1".parse::<NoiseModel>().is_err());
        assert!("round".parse::<NoiseModel>().is_err());
    }
}
