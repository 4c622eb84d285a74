use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("group mismatch: {0} vs {1}")]
    GroupMismatch(String, String),

    #[error("invalid group {0:?}: expected c<N> or d<N> with N >= 1")]
    InvalidGroup(String),

    #[error("rotation order must be at least 1, got {0}")]
    InvalidOrder(usize),

    #[error("element ({i0},{i1}) out of range for {group}")]
    InvalidElement { i0: usize, i1: usize, group: String },

    #[error("irrep (j={j}, k={k}) out of range for {group}")]
    IrrepOutOfRange { j: usize, k: usize, group: String },

    #[error("filter size must be odd and at least 1, got {0}")]
    EvenFilterSize(usize),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("representation mismatch: expected {expected}, got {got}")]
    RepMismatch { expected: String, got: String },

    #[error("{op} would break steerability of a {rep} feature map")]
    Steerability { op: &'static str, rep: String },

    #[error("expected {expected} base filters, got {got}")]
    BaseCount { expected: usize, got: usize },

    #[error("spatial size {h}x{w} is smaller than the {s}x{s} kernel")]
    SpatialTooSmall { h: usize, w: usize, s: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
