use thiserror::Error;

pub type Result<T> = std::result::Result<T, PcrError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PcrError {
    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("SVD did not converge after {sweeps} sweeps (max relative off-diagonal {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("rank deficient: singular value {index} is {sigma:e}, threshold {threshold:e}")]
    RankDeficient {
        index: usize,
        sigma: f64,
        threshold: f64,
    },

    #[error("not enough degrees of freedom: n = {n}, p = {p} (need n > p)")]
    DegreesOfFreedom { n: usize, p: usize },

    #[error("component count d = {d} outside 1..={p}")]
    ComponentRange { d: usize, p: usize },

    #[error("index {index} out of range for {len} components")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("degenerate variance: {0}")]
    Degenerate(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("replicate {replicate}: {source}")]
    Replicate {
        replicate: usize,
        #[source]
        source: Box<PcrError>,
    },
}
