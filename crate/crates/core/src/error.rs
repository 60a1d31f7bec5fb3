use thiserror::Error;

/// Errors produced by the drawing engine.
#[derive(Error, Debug)]
pub enum Error {
    #[error("graph is disconnected: no path between nodes {a} and {b}")]
    Disconnected { a: usize, b: usize },

    #[error("edge list parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("graph has no nodes")]
    EmptyGraph,

    #[error("random graph generation exhausted {attempts} attempts")]
    GeneratorExhausted { attempts: usize },

    #[error("shape mismatch in {op}: {lhs} vs {rhs}")]
    ShapeMismatch {
        op: &'static str,
        lhs: String,
        rhs: String,
    },

    #[error("backward requires a scalar loss, got shape {rows}x{cols}")]
    NonScalarLoss { rows: usize, cols: usize },

    #[error("matrix is not symmetric (max asymmetry {max_asym:e})")]
    NotSymmetric { max_asym: f64 },

    #[error("node {node} is isolated; degree normalization is undefined")]
    IsolatedNode { node: usize },

    #[error("positional encoding dimension k={k} too large for a graph with {n} nodes; use k <= {max} or a larger graph")]
    PeDimensionTooLarge { k: usize, n: usize, max: usize },

    #[error("spectral layout needs at least 3 nodes, got {n}")]
    GraphTooSmall { n: usize },

    #[error("loss became non-finite at step {step}")]
    NonFiniteLoss { step: usize },

    #[error("layout is all-zero after centering; shape comparison is undefined")]
    DegenerateLayout,

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
