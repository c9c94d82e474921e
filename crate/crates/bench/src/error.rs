use std::path::PathBuf;

use jaguar::solvers::TraceRecord;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("config: {0}")]
    Config(String),
    #[error("config line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Library(#[from] jaguar::Error),
    /// A run aborted; `trace` holds the records up to the failure.
    #[error("run failed (seed {seed}): {error}")]
    Run {
        seed: u64,
        error: jaguar::Error,
        trace: Vec<TraceRecord>,
    },
    #[error("theory check `{0}` failed")]
    TheoryCheck(&'static str),
    #[error("mismatched checkpoints between `{0}` and `{1}`")]
    MismatchedCheckpoints(String, String),
}

impl BenchError {
    /// 2 for configuration problems, 3 for everything that fails at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Syntax { .. } => 2,
            Self::Library(e) if is_config(e) => 2,
            _ => 3,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| Self::Io { path, source }
    }
}

fn is_config(e: &jaguar::Error) -> bool {
    use jaguar::Error as E;
    matches!(
        e,
        E::Config(_)
            | E::InvalidParameter { .. }
            | E::DimensionMismatch { .. }
            | E::NoLinearMinimizationOracle
            | E::InvalidLabel { .. }
            | E::Parse { .. }
            | E::NoRows
    )
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;
