//! Builds problems from specs and executes runs, one per seed, in parallel.

use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use jaguar::dataio::{load_libsvm, normalize, synthetic_classification};
use jaguar::estimators::{default_tau, EstimatorKind};
use jaguar::feasible_sets::FeasibleSet;
use jaguar::objectives::{Logistic, Objective, Quadratic, Svm};
use jaguar::reference::reference_optimum;
use jaguar::solvers::{fw_deterministic, fw_stochastic, gd_jaguar, Budget, Problem, RunConfig, RunResult, Schedule, TraceRecord};

use crate::config::{DataSource, ExperimentSpec, ObjectiveSpec, ProblemSpec, ScheduleSpec, SetKind, SolverKind, TauSpec};
use crate::error::{BenchError, Result};

pub fn build_problem(spec: &ProblemSpec) -> Result<Problem> {
    let objective: Arc<dyn Objective> = match spec.objective {
        ObjectiveSpec::Quadratic => {
            let diag = match (&spec.diag, spec.dim) {
                (Some(diag), _) => diag.clone(),
                (None, Some(d)) => vec![1.0; d],
                (None, None) => return Err(BenchError::Config("quadratic needs `dim` or `diag`".into())),
            };
            let b = spec.b.clone().unwrap_or_else(|| vec![0.0; diag.len()]);
            Arc::new(Quadratic::diagonal(diag, b)?)
        }
        ObjectiveSpec::Logistic | ObjectiveSpec::Svm => {
            let raw = match spec.data.as_ref().expect("validated") {
                DataSource::File(path) => load_libsvm(path)?,
                DataSource::Synthetic { m, d, separability, seed } => {
                    synthetic_classification(*m, *d, *seed, *separability)?
                }
            };
            let ds = normalize(&raw, spec.normalize);
            if spec.objective == ObjectiveSpec::Logistic {
                Arc::new(Logistic::new(ds, spec.reg_c)?)
            } else {
                Arc::new(Svm::new(ds, spec.reg_c)?)
            }
        }
    };
    let d = objective.dim();
    let set = match spec.set {
        SetKind::Simplex => FeasibleSet::simplex(d),
        SetKind::L1Ball => FeasibleSet::l1_ball(d, spec.radius)?,
        SetKind::L2Ball => FeasibleSet::l2_ball(d, spec.radius)?,
        SetKind::Unconstrained => FeasibleSet::unconstrained(d),
    };
    Ok(Problem::new(objective, set)?)
}

const FSTAR_FILE: &str = "fstar.txt";

/// `f*` from the spec, the cache in `dir`, or a fresh reference solve (then
/// cached). `None` when the objective admits no reference solve.
pub fn resolve_f_star(spec: &ExperimentSpec, problem: &Problem, dir: &Path) -> Result<Option<f64>> {
    if let Some(f) = spec.problem.f_star {
        return Ok(Some(f));
    }
    let key = spec.problem_hash();
    let path = dir.join(FSTAR_FILE);
    if let Ok(text) = std::fs::read_to_string(&path) {
        let mut lines = text.lines();
        if lines.next() == Some(&format!("problem_hash={key}")) {
            if let Some(v) = lines.next().and_then(|l| l.strip_prefix("f_star=")).and_then(|v| v.parse().ok()) {
                return Ok(Some(v));
            }
        }
    }
    let Some(reference) = reference_optimum(problem.objective.as_ref(), &problem.set) else {
        return Ok(None);
    };
    std::fs::create_dir_all(dir).map_err(BenchError::io(dir))?;
    let body = format!(
        "problem_hash={key}\nf_star={}\ncertificate={:e}\n",
        reference.value, reference.certificate
    );
    std::fs::write(&path, body).map_err(BenchError::io(&path))?;
    Ok(Some(reference.value))
}

/// The run configuration for one `(estimator, seed)` pair.
pub fn run_config(
    spec: &ExperimentSpec,
    problem: &Problem,
    estimator: EstimatorKind,
    seed: u64,
    f_star: Option<f64>,
) -> RunConfig {
    let m = &spec.method;
    let d = problem.dim();
    let lipschitz = m.lipschitz.or_else(|| problem.objective.smoothness());
    let tau = match m.tau {
        TauSpec::Fixed(t) => t,
        TauSpec::Auto { epsilon } => default_tau(d, epsilon, lipschitz, Some(problem.set.diameter())),
    };
    let mut cfg = RunConfig::new(problem.clone(), estimator);
    cfg.noise = m.noise;
    cfg.feedback = m.feedback;
    cfg.minibatch = m.minibatch;
    cfg.tau = tau;
    cfg.budget = Budget::OracleCalls(spec.run.budget);
    cfg.seed = seed;
    cfg.trace_every = spec.run.trace_every;
    cfg.x0 = spec.run.x0.clone();
    cfg.lipschitz = lipschitz;
    cfg.schedule = m.schedule.map(|s| match s {
        ScheduleSpec::FwDeterministic => Schedule::fw_deterministic(d),
        ScheduleSpec::FwStochastic => Schedule::fw_stochastic(d),
        ScheduleSpec::Constant(gamma) => Schedule::Constant { gamma },
    });
    cfg.checkpoints = spec.run.checkpoint_grid();
    cfg.f_star = f_star;
    cfg
}

pub fn solve(solver: SolverKind, cfg: &RunConfig) -> RunResult {
    match solver {
        SolverKind::FwDeterministic => fw_deterministic(cfg),
        SolverKind::FwStochastic => fw_stochastic(cfg),
        SolverKind::Gd => gd_jaguar(cfg),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedRun {
    pub seed: u64,
    pub trace: Vec<TraceRecord>,
    pub iterations: u64,
    pub oracle_calls: u64,
    pub max_violation: f64,
    /// Exact `f(x⁰)`.
    pub f0: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodResult {
    /// Method name as requested, e.g. `jaguar` or `l2smooth`.
    pub label: String,
    pub estimator: EstimatorKind,
    pub checkpoints: Vec<u64>,
    pub runs: Vec<SeedRun>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultBundle {
    pub name: String,
    pub config_hash: String,
    pub code_version: String,
    pub f_star: Option<f64>,
    pub methods: Vec<MethodResult>,
}

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Runs every requested method (the spec's estimator when `methods` is
/// empty) on every seed. Seeds of a method run concurrently.
pub fn run_experiment(spec: &ExperimentSpec, methods: &[String], out_dir: &Path) -> Result<ResultBundle> {
    let problem = build_problem(&spec.problem)?;
    let f_star = resolve_f_star(spec, &problem, out_dir)?;
    let names: Vec<String> = if methods.is_empty() {
        vec![spec.method.estimator.clone()]
    } else {
        methods.to_vec()
    };
    let mut results = Vec::new();
    for name in names {
        let kind = EstimatorKind::parse(&name, problem.dim())?;
        let runs: Vec<std::result::Result<SeedRun, BenchError>> = spec
            .run
            .seeds
            .par_iter()
            .map(|&seed| {
                let cfg = run_config(spec, &problem, kind, seed, f_star);
                solve(spec.method.solver, &cfg)
                    .map(|out| SeedRun {
                        seed,
                        trace: out.trace,
                        iterations: out.iterations,
                        oracle_calls: out.stats.calls,
                        max_violation: out.max_violation,
                        f0: out.f0,
                    })
                    .map_err(|f| match f.error {
                        e @ (jaguar::Error::NonFinite { .. } | jaguar::Error::Io(_)) => BenchError::Run {
                            seed,
                            error: e,
                            trace: f.trace,
                        },
                        e => BenchError::Library(e),
                    })
            })
            .collect();
        results.push(MethodResult {
            label: name,
            estimator: kind,
            checkpoints: spec.run.checkpoint_grid(),
            runs: runs.into_iter().collect::<Result<_>>()?,
        });
    }
    Ok(ResultBundle {
        name: spec.name.clone(),
        config_hash: spec.config_hash(),
        code_version: CODE_VERSION.to_string(),
        f_star,
        methods: results,
    })
}
