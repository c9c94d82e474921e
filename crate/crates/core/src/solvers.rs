//! Frank-Wolfe and gradient descent driven by zero-order estimates, with
//! their step schedules and the generic estimate-then-step loop.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, positive, Error, Result};
use crate::estimators::{EstimatorKind, EstimatorState, GradientEstimator, DEFAULT_TAU};
use crate::feasible_sets::FeasibleSet;
use crate::objectives::Objective;
use crate::oracle::{CallStats, Feedback, NoiseModel, ZeroOrderOracle};
use crate::rng::{Stream, Streams};
use crate::vector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    /// `γ_k = 4/(k + 8d)`.
    FwDeterministic { d: usize },
    /// `γ_k = 4/(k + 8d^{3/2})`, `η_k = 4/(k + 8d^{3/2})^{2/3}`.
    FwStochastic { d: usize },
    /// `γ_k ≡ gamma`.
    Constant { gamma: f64 },
}

impl Schedule {
    pub fn fw_deterministic(d: usize) -> Self {
        Self::FwDeterministic { d }
    }

    pub fn fw_stochastic(d: usize) -> Self {
        Self::FwStochastic { d }
    }

    /// `γ = 1/(4dL)`.
    pub fn gd(d: usize, l: f64) -> Result<Self> {
        if l.is_nan() || l <= 0.0 || !l.is_finite() {
            return Err(Error::InvalidParameter {
                name: "L",
                value: l,
                reason: "must be finite and > 0",
            });
        }
        Ok(Self::Constant {
            gamma: 1.0 / (4.0 * d as f64 * l),
        })
    }

    fn stochastic_shift(d: usize) -> f64 {
        8.0 * (d as f64).powf(1.5)
    }

    pub fn gamma(&self, k: u64) -> f64 {
        match *self {
            Self::FwDeterministic { d } => 4.0 / (k as f64 + 8.0 * d as f64),
            Self::FwStochastic { d } => 4.0 / (k as f64 + Self::stochastic_shift(d)),
            Self::Constant { gamma } => gamma,
        }
    }

    pub fn eta(&self, k: u64) -> Option<f64> {
        match *self {
            Self::FwStochastic { d } => {
                let c = (k as f64 + Self::stochastic_shift(d)).cbrt();
                Some(4.0 / (c * c))
            }
            _ => None,
        }
    }
}

/// An objective together with its domain.
#[derive(Debug, Clone)]
pub struct Problem {
    pub objective: Arc<dyn Objective>,
    pub set: FeasibleSet,
}

impl Problem {
    pub fn new(objective: Arc<dyn Objective>, set: FeasibleSet) -> Result<Self> {
        check_dim(objective.dim(), set.dim())?;
        Ok(Self { objective, set })
    }

    pub fn dim(&self) -> usize {
        self.set.dim()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Budget {
    Iterations(u64),
    /// Total oracle calls including initialization.
    OracleCalls(u64),
}

impl Budget {
    /// Iteration count affordable given the estimator's cost model.
    pub fn iterations(&self, init_calls: u64, per_iteration: u64) -> Result<u64> {
        match *self {
            Self::Iterations(n) => Ok(n),
            Self::OracleCalls(m) if m < init_calls => Err(Error::Config(format!(
                "oracle-call budget {m} does not cover the {init_calls} initialization calls"
            ))),
            Self::OracleCalls(m) => Ok((m - init_calls) / per_iteration),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem: Problem,
    pub estimator: EstimatorKind,
    pub noise: NoiseModel,
    pub feedback: Feedback,
    /// Minibatch size of the finite sum drawn with every sample.
    pub minibatch: Option<usize>,
    pub tau: f64,
    pub budget: Budget,
    pub seed: u64,
    pub trace_every: u64,
    /// Defaults to the first vertex of the set (zero when unconstrained).
    pub x0: Option<Vec<f64>>,
    /// Smoothness constant for gradient descent; falls back to the objective's.
    pub lipschitz: Option<f64>,
    pub schedule: Option<Schedule>,
    /// Oracle-call checkpoints; the last iterate within each is always traced.
    pub checkpoints: Vec<u64>,
    pub f_star: Option<f64>,
}

impl RunConfig {
    pub fn new(problem: Problem, estimator: EstimatorKind) -> Self {
        Self {
            problem,
            estimator,
            noise: NoiseModel::None,
            feedback: Feedback::Deterministic,
            minibatch: None,
            tau: DEFAULT_TAU,
            budget: Budget::Iterations(1000),
            seed: 0,
            trace_every: 1,
            x0: None,
            lipschitz: None,
            schedule: None,
            checkpoints: Vec::new(),
            f_star: None,
        }
    }

    fn validate(&self) -> Result<()> {
        positive("tau", self.tau)?;
        if self.trace_every == 0 {
            return Err(Error::Config("trace_every must be >= 1".into()));
        }
        if matches!(self.budget, Budget::Iterations(0) | Budget::OracleCalls(0)) {
            return Err(Error::Config("budget must be positive".into()));
        }
        self.estimator.validate(self.problem.dim())
    }

    fn start(&self) -> Result<Vec<f64>> {
        let x0 = self.x0.clone().unwrap_or_else(|| self.problem.set.first_vertex());
        check_dim(self.problem.dim(), x0.len())?;
        if !self.problem.set.contains(&x0, 1e-12) {
            return Err(Error::Config("x0 lies outside the feasible set".into()));
        }
        Ok(x0)
    }

    fn oracle(&self) -> Result<ZeroOrderOracle> {
        let oracle = ZeroOrderOracle::new(self.problem.objective.clone(), self.noise, self.seed)
            .with_feedback(self.feedback);
        match self.minibatch {
            Some(b) => oracle.with_minibatch(b),
            None => Ok(oracle),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iter: u64,
    /// Cumulative oracle calls after producing `x^iter`.
    pub oracle_calls: u64,
    /// Noise-free `f(x^iter)`.
    pub f_value: f64,
    pub f_gap: Option<f64>,
    /// `‖estimate − ∇f(x^iter)‖` for the estimate held when `x^iter` is reached,
    /// if the objective has an analytic gradient.
    pub grad_err: Option<f64>,
    /// Step that produced `x^iter`; zero at `iter = 0`.
    pub gamma: f64,
    pub eta: Option<f64>,
}

/// Gradient descent reports the uniformly drawn candidate `x̂_N` and the
/// iterate of smallest true gradient norm.
#[derive(Debug, Clone, PartialEq)]
pub struct GdSummary {
    pub uniform_index: u64,
    pub uniform_iterate: Vec<f64>,
    pub min_grad: Option<(u64, f64, Vec<f64>)>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub x_final: Vec<f64>,
    pub trace: Vec<TraceRecord>,
    pub stats: CallStats,
    pub iterations: u64,
    pub init_calls: u64,
    pub per_iteration_calls: u64,
    /// `f(x^0)`; with `f*` this is `F_0`.
    pub f0: f64,
    /// Largest feasibility violation over all iterates.
    pub max_violation: f64,
    pub gd: Option<GdSummary>,
}

/// A failed run with the trace recorded up to the failure.
#[derive(Debug, thiserror::Error)]
#[error("{error}")]
pub struct RunFailure {
    #[source]
    pub error: Error,
    pub trace: Vec<TraceRecord>,
}

impl From<Error> for RunFailure {
    fn from(error: Error) -> Self {
        Self {
            error,
            trace: Vec::new(),
        }
    }
}

pub type RunResult = std::result::Result<RunOutcome, RunFailure>;

struct Recorder {
    objective: Arc<dyn Objective>,
    set: FeasibleSet,
    f_star: Option<f64>,
    every: u64,
    last: u64,
    marks: BTreeSet<u64>,
    trace: Vec<TraceRecord>,
    max_violation: f64,
}

impl Recorder {
    fn new(cfg: &RunConfig, iterations: u64, init: u64, per: u64) -> Self {
        let marks = cfg
            .checkpoints
            .iter()
            .filter(|&&c| c >= init)
            .map(|&c| ((c - init) / per).min(iterations))
            .collect();
        Self {
            objective: cfg.problem.objective.clone(),
            set: cfg.problem.set,
            f_star: cfg.f_star,
            every: cfg.trace_every,
            last: iterations,
            marks,
            trace: Vec::new(),
            max_violation: 0.0,
        }
    }

    fn observe(
        &mut self,
        k: u64,
        calls: u64,
        x: &[f64],
        estimate: Option<&[f64]>,
        gamma: f64,
        eta: Option<f64>,
    ) -> Result<()> {
        self.max_violation = self.max_violation.max(self.set.violation(x));
        if !(k == 0 || k == self.last || k.is_multiple_of(self.every) || self.marks.contains(&k)) {
            return Ok(());
        }
        let f_value = self.objective.value(x);
        if !f_value.is_finite() {
            return Err(Error::NonFinite { call: calls });
        }
        let grad_err = match (estimate, self.objective.gradient(x)) {
            (Some(est), Some(g)) => Some(vector::dist(est, &g)),
            _ => None,
        };
        self.trace.push(TraceRecord {
            iter: k,
            oracle_calls: calls,
            f_value,
            f_gap: self.f_star.map(|f| f_value - f),
            grad_err,
            gamma,
            eta,
        });
        Ok(())
    }

    fn fail(self, error: Error) -> RunFailure {
        RunFailure {
            error,
            trace: self.trace,
        }
    }
}

/// Oracle, estimator randomness and bookkeeping of a single run.
struct Session {
    oracle: ZeroOrderOracle,
    rng: ChaCha8Rng,
    x: Vec<f64>,
    f0: f64,
}

impl Session {
    fn open(cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        let x = cfg.start()?;
        Ok(Self {
            oracle: cfg.oracle()?,
            rng: Streams::new(cfg.seed).rng(Stream::Estimator),
            f0: cfg.problem.objective.value(&x),
            x,
        })
    }

    fn finish(self, rec: Recorder, iterations: u64, init: u64, per: u64, gd: Option<GdSummary>) -> RunOutcome {
        RunOutcome {
            x_final: self.x,
            trace: rec.trace,
            stats: self.oracle.stats(),
            iterations,
            init_calls: init,
            per_iteration_calls: per,
            f0: self.f0,
            max_violation: rec.max_violation,
            gd,
        }
    }
}

/// Estimator-driven setup shared by the deterministic solvers.
fn prepare(cfg: &RunConfig) -> std::result::Result<(Session, GradientEstimator, Recorder, u64), RunFailure> {
    let mut session = Session::open(cfg)?;
    let d = cfg.problem.dim();
    let init = cfg.estimator.init_calls(d);
    let per = cfg.estimator.calls_per_iteration();
    let n = cfg.budget.iterations(init, per)?;
    let mut rec = Recorder::new(cfg, n, init, per);
    let estimator = match GradientEstimator::init(cfg.estimator, &mut session.oracle, &session.x, cfg.tau) {
        Ok(e) => e,
        Err(e) => return Err(rec.fail(e)),
    };
    if let Err(e) = rec.observe(0, session.oracle.calls(), &session.x, estimator.current(), 0.0, None) {
        return Err(rec.fail(e));
    }
    Ok((session, estimator, rec, n))
}

/// Frank-Wolfe with zero-order estimates: `h^{k+1}` from the estimator,
/// `s^k = LMO(h^{k+1})`, `x^{k+1} = x^k + γ_k(s^k − x^k)`.
pub fn fw_deterministic(cfg: &RunConfig) -> RunResult {
    let set = cfg.problem.set;
    if !set.is_bounded() {
        return Err(Error::NoLinearMinimizationOracle.into());
    }
    let schedule = cfg.schedule.unwrap_or(Schedule::fw_deterministic(cfg.problem.dim()));
    let (mut s, mut est, mut rec, n) = prepare(cfg)?;
    for k in 0..n {
        let step = (|| {
            let h = est.estimate(&mut s.oracle, &s.x, &mut s.rng)?;
            let vertex = set.lmo(h)?;
            let gamma = schedule.gamma(k);
            vector::convex_step(&mut s.x, &vertex, gamma);
            rec.observe(k + 1, s.oracle.calls(), &s.x, est.current(), gamma, None)
        })();
        if let Err(e) = step {
            return Err(rec.fail(e));
        }
    }
    let (init, per) = (cfg.estimator.init_calls(set.dim()), cfg.estimator.calls_per_iteration());
    Ok(s.finish(rec, n, init, per, None))
}

/// Gradient descent with zero-order estimates: `x^{k+1} = x^k − γ h^{k+1}`,
/// `γ = 1/(4dL)` unless overridden.
pub fn gd_jaguar(cfg: &RunConfig) -> RunResult {
    let d = cfg.problem.dim();
    if cfg.problem.set.is_bounded() {
        return Err(Error::Config("gradient descent needs an unconstrained problem".into()).into());
    }
    let schedule = match cfg.schedule {
        Some(s) => s,
        None => {
            let l = cfg.lipschitz.or_else(|| cfg.problem.objective.smoothness()).ok_or_else(|| {
                Error::Config("gradient descent needs a smoothness constant L".into())
            })?;
            Schedule::gd(d, l)?
        }
    };
    let (mut s, mut est, mut rec, n) = prepare(cfg)?;
    let mut harness = Streams::new(cfg.seed).rng(Stream::Harness);
    let uniform_index = if n > 0 { harness.random_range(0..n) } else { 0 };
    let mut uniform_iterate = s.x.clone();
    let objective = cfg.problem.objective.clone();
    let mut min_grad: Option<(u64, f64, Vec<f64>)> = None;
    let mut track = |k: u64, x: &[f64]| {
        if let Some(g) = objective.gradient(x) {
            let gn = vector::norm(&g);
            if min_grad.as_ref().is_none_or(|m| gn < m.1) {
                min_grad = Some((k, gn, x.to_vec()));
            }
        }
    };
    for k in 0..n {
        if k == uniform_index {
            uniform_iterate.copy_from_slice(&s.x);
        }
        track(k, &s.x);
        let step = (|| {
            let h = est.estimate(&mut s.oracle, &s.x, &mut s.rng)?;
            let gamma = schedule.gamma(k);
            vector::descent_step(&mut s.x, h, gamma);
            rec.observe(k + 1, s.oracle.calls(), &s.x, est.current(), gamma, None)
        })();
        if let Err(e) = step {
            return Err(rec.fail(e));
        }
    }
    let gd = GdSummary {
        uniform_index,
        uniform_iterate,
        min_grad,
    };
    let (init, per) = (cfg.estimator.init_calls(d), cfg.estimator.calls_per_iteration());
    Ok(s.finish(rec, n, init, per, Some(gd)))
}

/// Stochastic Frank-Wolfe. Per iteration: draw `i_k`, draw `ξ±_k`, one
/// central difference, refresh `h`, form the SEGA point `ρ`,
/// `g ← (1−η_k)g + η_k ρ`, `s = LMO(g)`, `x ← x + γ_k(s − x)`.
pub fn fw_stochastic(cfg: &RunConfig) -> RunResult {
    let set = cfg.problem.set;
    let d = set.dim();
    if !set.is_bounded() {
        return Err(Error::NoLinearMinimizationOracle.into());
    }
    if cfg.feedback == Feedback::Deterministic {
        return Err(Error::Config(
            "stochastic Frank-Wolfe needs one_point or two_point feedback; use fw_deterministic".into(),
        )
        .into());
    }
    if !matches!(cfg.estimator, EstimatorKind::JaguarStochastic | EstimatorKind::Jaguar) {
        return Err(Error::Config("stochastic Frank-Wolfe runs the JAGUAR estimator only".into()).into());
    }
    let schedule = cfg.schedule.unwrap_or(Schedule::fw_stochastic(d));
    if schedule.eta(0).is_none() {
        return Err(Error::Config("stochastic Frank-Wolfe needs a momentum schedule".into()).into());
    }
    let kind = EstimatorKind::JaguarStochastic;
    let (init, per) = (kind.init_calls(d), kind.calls_per_iteration());
    let mut s = Session::open(cfg)?;
    let n = cfg.budget.iterations(init, per)?;
    let mut rec = Recorder::new(cfg, n, init, per);
    let mut state = match EstimatorState::init_stochastic(&mut s.oracle, &s.x, cfg.tau) {
        Ok(st) => st,
        Err(e) => return Err(rec.fail(e)),
    };
    if let Err(e) = rec.observe(0, s.oracle.calls(), &s.x, state.momentum(), 0.0, None) {
        return Err(rec.fail(e));
    }
    for k in 0..n {
        let step = (|| {
            let eta = schedule.eta(k).expect("checked above");
            let g = state.jaguar_stochastic_step(&mut s.oracle, &s.x, &mut s.rng, eta)?;
            let vertex = set.lmo(g)?;
            let gamma = schedule.gamma(k);
            vector::convex_step(&mut s.x, &vertex, gamma);
            rec.observe(k + 1, s.oracle.calls(), &s.x, state.momentum(), gamma, Some(eta))
        })();
        if let Err(e) = step {
            return Err(rec.fail(e));
        }
    }
    Ok(s.finish(rec, n, init, per, None))
}

/// Map `(k, x^k, h^{k+1}) ↦ x^{k+1}` plugged into [`run_generic`].
pub trait StepRule {
    /// Step size reported for iteration `k`.
    fn gamma(&self, k: u64) -> f64;
    fn apply(&mut self, k: u64, x: &mut [f64], estimate: &[f64]) -> Result<()>;
}

#[derive(Debug, Clone, Copy)]
pub struct FrankWolfeStep {
    pub set: FeasibleSet,
    pub schedule: Schedule,
}

impl StepRule for FrankWolfeStep {
    fn gamma(&self, k: u64) -> f64 {
        self.schedule.gamma(k)
    }

    fn apply(&mut self, k: u64, x: &mut [f64], estimate: &[f64]) -> Result<()> {
        let s = self.set.lmo(estimate)?;
        vector::convex_step(x, &s, self.schedule.gamma(k));
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GradientStep {
    pub schedule: Schedule,
}

impl StepRule for GradientStep {
    fn gamma(&self, k: u64) -> f64 {
        self.schedule.gamma(k)
    }

    fn apply(&mut self, k: u64, x: &mut [f64], estimate: &[f64]) -> Result<()> {
        vector::descent_step(x, estimate, self.schedule.gamma(k));
        Ok(())
    }
}

/// Leaves `x` in place; the estimator keeps refining at a frozen point.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl StepRule for Identity {
    fn gamma(&self, _k: u64) -> f64 {
        0.0
    }

    fn apply(&mut self, _k: u64, _x: &mut [f64], _estimate: &[f64]) -> Result<()> {
        Ok(())
    }
}

/// `h^{k+1} = estimator(x^k, h^k)`, `x^{k+1} = step(x^k, h^{k+1})`.
pub fn run_generic(step: &mut dyn StepRule, cfg: &RunConfig) -> RunResult {
    let (mut s, mut est, mut rec, n) = prepare(cfg)?;
    for k in 0..n {
        let res = (|| {
            let h = est.estimate(&mut s.oracle, &s.x, &mut s.rng)?;
            step.apply(k, &mut s.x, h)?;
            rec.observe(k + 1, s.oracle.calls(), &s.x, est.current(), step.gamma(k), None)
        })();
        if let Err(e) = res {
            return Err(rec.fail(e));
        }
    }
    let d = cfg.problem.dim();
    let (init, per) = (cfg.estimator.init_calls(d), cfg.estimator.calls_per_iteration());
    Ok(s.finish(rec, n, init, per, None))
}
