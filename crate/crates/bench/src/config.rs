//! Experiment configuration files.
//!
//! Grammar, one item per line:
//!
//! ```text
//! # comment (also after a value)
//! key = value            top-level: name, output_dir
//! [problem]              section header: problem | method | run
//! key = value
//! ```
//!
//! Relative paths are resolved against the directory of the config file.
//! Unknown sections or keys, duplicate keys and missing required keys are
//! errors.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use jaguar::dataio::Normalization;
use jaguar::oracle::{Feedback, NoiseModel};

use crate::error::{BenchError, Result};

const SECTIONS: [&str; 3] = ["problem", "method", "run"];

const KEYS: &[(&str, &[&str])] = &[
    ("", &["name", "output_dir"]),
    (
        "problem",
        &[
            "objective", "dim", "diag", "b", "data", "synthetic", "data_seed", "normalize", "reg_c", "set",
            "radius", "f_star",
        ],
    ),
    (
        "method",
        &[
            "solver", "estimator", "feedback", "minibatch", "tau", "epsilon", "noise", "lipschitz", "schedule",
        ],
    ),
    ("run", &["budget", "seeds", "trace_every", "checkpoints", "x0"]),
];

/// Parsed `section -> key -> value` table with line numbers.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<(String, String), (usize, String)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut section = String::new();
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let syntax = |message: String| BenchError::Syntax {
                line: line_no,
                message,
            };
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| syntax(format!("unterminated section header `{line}`")))?
                    .trim();
                if !SECTIONS.contains(&name) {
                    return Err(syntax(format!("unknown section `[{name}]`")));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| syntax(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let known = KEYS.iter().find(|(s, _)| *s == section).map(|(_, k)| *k).unwrap_or(&[]);
            if !known.contains(&key) {
                let place = if section.is_empty() { "top level".to_string() } else { format!("[{section}]") };
                return Err(syntax(format!("unknown key `{key}` at {place}")));
            }
            if value.is_empty() {
                return Err(syntax(format!("empty value for `{key}`")));
            }
            if entries
                .insert((section.clone(), key.to_string()), (line_no, value.to_string()))
                .is_some()
            {
                return Err(syntax(format!("duplicate key `{key}`")));
            }
        }
        Ok(Self { entries })
    }

    fn get(&self, section: &str, key: &str) -> Option<(usize, &str)> {
        self.entries
            .get(&(section.to_string(), key.to_string()))
            .map(|(l, v)| (*l, v.as_str()))
    }

    fn require(&self, section: &str, key: &str) -> Result<(usize, &str)> {
        self.get(section, key).ok_or_else(|| {
            let place = if section.is_empty() { "top level".to_string() } else { format!("[{section}]") };
            BenchError::Config(format!("missing required key `{key}` at {place}"))
        })
    }

    fn parsed<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(section, key)
            .map(|(line, v)| {
                v.parse::<T>().map_err(|e| BenchError::Syntax {
                    line,
                    message: format!("`{key}`: {e}"),
                })
            })
            .transpose()
    }

    fn list<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(section, key)
            .map(|(line, v)| {
                v.split(',')
                    .map(|t| {
                        t.trim().parse::<T>().map_err(|e| BenchError::Syntax {
                            line,
                            message: format!("`{key}`: `{}`: {e}", t.trim()),
                        })
                    })
                    .collect()
            })
            .transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveSpec {
    Quadratic,
    Logistic,
    Svm,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    File(PathBuf),
    Synthetic { m: usize, d: usize, separability: f64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetKind {
    Simplex,
    L1Ball,
    L2Ball,
    Unconstrained,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub objective: ObjectiveSpec,
    /// Quadratic dimension (identity `A` unless `diag` is given).
    pub dim: Option<usize>,
    pub diag: Option<Vec<f64>>,
    pub b: Option<Vec<f64>>,
    pub data: Option<DataSource>,
    pub normalize: Normalization,
    pub reg_c: f64,
    pub set: SetKind,
    pub radius: f64,
    pub f_star: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    FwDeterministic,
    FwStochastic,
    Gd,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleSpec {
    FwDeterministic,
    FwStochastic,
    Constant(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauSpec {
    Fixed(f64),
    /// `ε/(√d·L·D)`.
    Auto { epsilon: Option<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSpec {
    pub solver: SolverKind,
    /// Estimator name, resolved against the problem dimension at run time.
    pub estimator: String,
    pub feedback: Feedback,
    pub minibatch: Option<usize>,
    pub tau: TauSpec,
    pub noise: NoiseModel,
    pub lipschitz: Option<f64>,
    pub schedule: Option<ScheduleSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CheckpointSpec {
    /// `n` evenly spaced oracle-call counts ending at the budget.
    Even(usize),
    List(Vec<u64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub budget: u64,
    pub seeds: Vec<u64>,
    pub trace_every: u64,
    pub checkpoints: CheckpointSpec,
    pub x0: Option<Vec<f64>>,
}

impl RunSpec {
    pub fn checkpoint_grid(&self) -> Vec<u64> {
        match &self.checkpoints {
            CheckpointSpec::Even(n) => (1..=*n as u64).map(|j| self.budget * j / *n as u64).collect(),
            CheckpointSpec::List(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub output_dir: PathBuf,
    pub problem: ProblemSpec,
    pub method: MethodSpec,
    pub run: RunSpec,
}

fn config_err(msg: impl Into<String>) -> BenchError {
    BenchError::Config(msg.into())
}

impl ExperimentSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            config_err(format!("cannot read config {}: {e}", path.display()))
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_str_in(&text, &base)
    }

    /// Parses config text, resolving relative paths against `base`.
    pub fn from_str_in(text: &str, base: &Path) -> Result<Self> {
        let raw = RawConfig::parse(text)?;
        let resolve = |p: &str| {
            let p = PathBuf::from(p);
            if p.is_absolute() { p } else { base.join(p) }
        };
        let name = raw.require("", "name")?.1.to_string();
        if !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(config_err(format!("name `{name}` may only contain [A-Za-z0-9_-]")));
        }
        let output_dir = raw
            .get("", "output_dir")
            .map(|(_, v)| resolve(v))
            .unwrap_or_else(|| base.join("results").join(&name));

        let objective = match raw.require("problem", "objective")?.1 {
            "quadratic" => ObjectiveSpec::Quadratic,
            "logistic" => ObjectiveSpec::Logistic,
            "svm" => ObjectiveSpec::Svm,
            other => return Err(config_err(format!("unknown objective `{other}`"))),
        };
        let data = match (raw.get("problem", "data"), raw.list::<f64>("problem", "synthetic")?) {
            (Some(_), Some(_)) => return Err(config_err("`data` and `synthetic` are mutually exclusive")),
            (Some((_, p)), None) => Some(DataSource::File(resolve(p))),
            (None, Some(v)) => {
                let [m, d, s] = v[..] else {
                    return Err(config_err("`synthetic` takes `m, d, separability`"));
                };
                if m < 1.0 || d < 1.0 || m.fract() != 0.0 || d.fract() != 0.0 {
                    return Err(config_err("`synthetic` needs positive integer m and d"));
                }
                Some(DataSource::Synthetic {
                    m: m as usize,
                    d: d as usize,
                    separability: s,
                    seed: raw.parsed("problem", "data_seed")?.unwrap_or(0),
                })
            }
            (None, None) => None,
        };
        let set = match raw.get("problem", "set").map_or("simplex", |(_, v)| v) {
            "simplex" => SetKind::Simplex,
            "l1_ball" => SetKind::L1Ball,
            "l2_ball" => SetKind::L2Ball,
            "unconstrained" => SetKind::Unconstrained,
            other => return Err(config_err(format!("unknown set `{other}`"))),
        };
        let problem = ProblemSpec {
            objective,
            dim: raw.parsed("problem", "dim")?,
            diag: raw.list("problem", "diag")?,
            b: raw.list("problem", "b")?,
            data,
            normalize: raw.parsed("problem", "normalize")?.unwrap_or(Normalization::None),
            reg_c: raw.parsed("problem", "reg_c")?.unwrap_or(jaguar::objectives::DEFAULT_REG_C),
            set,
            radius: raw.parsed("problem", "radius")?.unwrap_or(1.0),
            f_star: raw.parsed("problem", "f_star")?,
        };

        let solver = match raw.get("method", "solver").map_or("fw_deterministic", |(_, v)| v) {
            "fw_deterministic" | "fw" => SolverKind::FwDeterministic,
            "fw_stochastic" => SolverKind::FwStochastic,
            "gd" => SolverKind::Gd,
            other => return Err(config_err(format!("unknown solver `{other}`"))),
        };
        let default_estimator = if solver == SolverKind::FwStochastic { "jaguar_stochastic" } else { "jaguar" };
        let tau = match raw.get("method", "tau") {
            Some((_, "auto")) => TauSpec::Auto {
                epsilon: raw.parsed("method", "epsilon")?,
            },
            Some(_) => TauSpec::Fixed(raw.parsed("method", "tau")?.expect("present")),
            None => TauSpec::Fixed(jaguar::estimators::DEFAULT_TAU),
        };
        let schedule = match raw.get("method", "schedule") {
            None => None,
            Some((_, "fw_deterministic")) => Some(ScheduleSpec::FwDeterministic),
            Some((_, "fw_stochastic")) => Some(ScheduleSpec::FwStochastic),
            Some((line, v)) => match v.strip_prefix("constant:").map(str::parse::<f64>) {
                Some(Ok(g)) => Some(ScheduleSpec::Constant(g)),
                _ => {
                    return Err(BenchError::Syntax {
                        line,
                        message: format!("unknown schedule `{v}`"),
                    })
                }
            },
        };
        let method = MethodSpec {
            solver,
            estimator: raw
                .get("method", "estimator")
                .map_or(default_estimator, |(_, v)| v)
                .to_string(),
            feedback: raw.parsed::<Feedback>("method", "feedback")?.unwrap_or(Feedback::Deterministic),
            minibatch: raw.parsed("method", "minibatch")?,
            tau,
            noise: raw.parsed::<NoiseModel>("method", "noise")?.unwrap_or(NoiseModel::None),
            lipschitz: raw.parsed("method", "lipschitz")?,
            schedule,
        };

        let checkpoints = match raw.get("run", "checkpoints") {
            None => CheckpointSpec::Even(20),
            Some((_, v)) if !v.contains(',') => CheckpointSpec::Even(raw.parsed("run", "checkpoints")?.expect("present")),
            Some(_) => CheckpointSpec::List(raw.list("run", "checkpoints")?.expect("present")),
        };
        let run = RunSpec {
            budget: raw.parsed("run", "budget")?.ok_or_else(|| config_err("missing required key `budget` at [run]"))?,
            seeds: raw.list("run", "seeds")?.unwrap_or_else(|| vec![0]),
            trace_every: raw.parsed("run", "trace_every")?.unwrap_or(1),
            checkpoints,
            x0: raw.list("run", "x0")?,
        };
        let spec = Self {
            name,
            output_dir,
            problem,
            method,
            run,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.problem;
        match (p.objective, &p.data) {
            (ObjectiveSpec::Quadratic, Some(_)) => {
                return Err(config_err("quadratic objectives take `dim`/`diag`, not data"))
            }
            (ObjectiveSpec::Quadratic, None) if p.dim.is_none() && p.diag.is_none() => {
                return Err(config_err("quadratic objective needs `dim` or `diag`"))
            }
            (ObjectiveSpec::Logistic | ObjectiveSpec::Svm, None) => {
                return Err(config_err("classification objectives need `data` or `synthetic`"))
            }
            (_, Some(DataSource::File(path))) if !path.is_file() => {
                return Err(config_err(format!("data file {} does not exist", path.display())))
            }
            _ => {}
        }
        if let (Some(d), Some(diag)) = (p.dim, &p.diag) {
            if d != diag.len() {
                return Err(config_err(format!("`dim` = {d} but `diag` has {} entries", diag.len())));
            }
        }
        if p.reg_c.is_nan() || p.reg_c <= 0.0 {
            return Err(config_err("`reg_c` must be > 0"));
        }
        if p.radius.is_nan() || p.radius <= 0.0 {
            return Err(config_err("`radius` must be > 0"));
        }
        if self.run.seeds.is_empty() {
            return Err(config_err("`seeds` must be nonempty"));
        }
        if self.run.budget == 0 {
            return Err(config_err("`budget` must be positive"));
        }
        if self.run.trace_every == 0 {
            return Err(config_err("`trace_every` must be >= 1"));
        }
        if matches!(self.run.checkpoints, CheckpointSpec::Even(0)) {
            return Err(config_err("`checkpoints` must be >= 1"));
        }
        if let TauSpec::Fixed(t) = self.method.tau {
            if t.is_nan() || t <= 0.0 {
                return Err(config_err("`tau` must be > 0"));
            }
        }
        let gd = self.method.solver == SolverKind::Gd;
        if gd != (p.set == SetKind::Unconstrained) {
            return Err(config_err("solver `gd` runs exactly on `set = unconstrained`"));
        }
        Ok(())
    }

    /// Applies command-line overrides.
    pub fn with_overrides(mut self, seed: Option<u64>, budget: Option<u64>) -> Result<Self> {
        if let Some(s) = seed {
            self.run.seeds = vec![s];
        }
        if let Some(b) = budget {
            self.run.budget = b;
        }
        self.validate()?;
        Ok(self)
    }

    /// Canonical text of the effective spec; paths are written as given.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:?}", self.name);
        let _ = writeln!(s, "{:?}", self.problem);
        let _ = writeln!(s, "{:?}", self.method);
        let _ = writeln!(s, "{:?}", self.run);
        s
    }

    /// SHA-256 of [`Self::canonical`], hex encoded.
    pub fn config_hash(&self) -> String {
        hex(&Sha256::digest(self.canonical().as_bytes()))
    }

    /// Hash of the problem part alone; keys the cached `f*`.
    pub fn problem_hash(&self) -> String {
        hex(&Sha256::digest(format!("{:?}", self.problem).as_bytes()))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
