use pcr_core::PcrError;
use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const OTHER: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const PARSE: i32 = 3;
    pub const RANK: i32 = 4;
    pub const DOF: i32 = 5;
    pub const CONVERGENCE: i32 = 6;
    pub const ALERT: i32 = 7;
}

#[derive(Debug, Error)]
pub enum AppError {
    #[error("{source_name}: line {line}: {message}")]
    Format {
        source_name: String,
        line: u64,
        message: String,
    },

    #[error(
        "{source_name}: line {line}, column '{column}': cannot parse '{value}' as a finite number"
    )]
    Parse {
        source_name: String,
        line: u64,
        column: String,
        value: String,
    },

    #[error("{path}: {field}: {message}")]
    Config {
        path: String,
        field: String,
        message: String,
    },

    #[error("column '{0}' has zero variance and cannot be z-scored")]
    ZeroVariance(String),

    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{count} check row(s) exceeded |z| > {threshold}")]
    Alert { count: usize, threshold: f64 },

    #[error(transparent)]
    Model(#[from] PcrError),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Format { .. }
            | AppError::Parse { .. }
            | AppError::Config { .. }
            | AppError::ZeroVariance(_) => exit::PARSE,
            AppError::Usage(_) => exit::USAGE,
            AppError::Io { .. } => exit::OTHER,
            AppError::Alert { .. } => exit::ALERT,
            AppError::Model(e) => model_exit_code(e),
        }
    }
}

fn model_exit_code(e: &PcrError) -> i32 {
    match e {
        PcrError::RankDeficient { .. } => exit::RANK,
        PcrError::DegreesOfFreedom { .. } => exit::DOF,
        PcrError::NoConvergence { .. } => exit::CONVERGENCE,
        PcrError::ComponentRange { .. } | PcrError::IndexOutOfRange { .. } => exit::USAGE,
        PcrError::NonFinite { .. } | PcrError::Config(_) => exit::PARSE,
        PcrError::Replicate { source, .. } => model_exit_code(source),
        PcrError::Shape(_) | PcrError::Degenerate(_) | PcrError::Precondition(_) => exit::OTHER,
    }
}
