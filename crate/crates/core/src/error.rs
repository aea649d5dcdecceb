use std::path::PathBuf;

use thiserror::Error;

use crate::planner::rules::Diagnostic;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("degenerate frame {frame}: {what}")]
    DegenerateFrame { frame: usize, what: &'static str },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("timestep {t} out of range for schedule with {steps} steps")]
    TimestepOutOfRange { t: usize, steps: usize },

    #[error("non-finite values at denoising step {step}")]
    NonFinite { step: usize },

    #[error("non-finite training loss at step {step}")]
    NonFiniteLoss { step: usize },

    #[error("agent {agent}: {source}")]
    Agent {
        agent: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("plan validation failed: {}", format_diagnostics(.0))]
    Validation(Vec<Diagnostic>),

    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },

    #[error("no plan blocks found in planner output")]
    NoPlans,

    #[error("fixture not found: {0}")]
    FixtureMissing(PathBuf),

    #[error("planner endpoint error: {0}")]
    Transport(String),

    #[error("planner endpoint rejected credentials (status {0})")]
    Auth(u16),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Model(#[from] candle_core::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn for_agent(self, agent: usize) -> Self {
        Error::Agent {
            agent,
            source: Box::new(self),
        }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_)
            | Error::Config { .. }
            | Error::InvalidArgument(_)
            | Error::DimensionMismatch { .. }
            | Error::NoPlans
            | Error::Json(_) => 1,
            Error::Transport(_) | Error::Auth(_) => 3,
            Error::Agent { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}

fn format_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
