use std::path::PathBuf;

use thiserror::Error;

use crate::conic::SolveStatus;
use crate::netmodel::Task;

/// Pipeline stage an error originated from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    InitialPoint,
    SparseStage1,
    TaskSelection,
    Refinement,
    Oracle,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Stage::InitialPoint => "initial point",
            Stage::SparseStage1 => "stage 1",
            Stage::TaskSelection => "stage 2",
            Stage::Refinement => "stage 3",
            Stage::Oracle => "oracle",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("instance infeasible ({stage})")]
    InstanceInfeasible { stage: Stage },

    #[error("solver failure ({stage}): status {status:?}")]
    SolverFailure { stage: Stage, status: SolveStatus },

    #[error("task {task:?} is outside the selection but has group norm {norm:e}")]
    SelectionMismatch { task: Task, norm: f64 },

    #[error("exhaustive search limited to {limit} tasks, instance has {tasks}")]
    SizeGuard { tasks: usize, limit: usize },

    #[error("{path}: {message}")]
    ConfigParse { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    /// True for errors that certify the instance itself has no feasible point.
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::InstanceInfeasible { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
