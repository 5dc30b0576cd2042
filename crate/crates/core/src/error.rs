use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("probability {0} outside [0, 1)")]
    InvalidProbability(f64),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),
    #[error("detectors {0:?} are not deterministic in the noiseless circuit")]
    NonDeterministic(Vec<usize>),
    #[error("mechanism {0} cannot be decomposed into edges touching at most two detectors")]
    Decomposition(String),
    #[error("edge {0} lies off the seam")]
    OffSeam(String),
    #[error("defect at detector {0} has no path to another defect or the boundary")]
    Disconnected(usize),
    #[error("{0} defects exceed the brute-force limit of {1}")]
    TooManyDefects(usize, usize),
    #[error("singular normal matrix; degenerate parameter combination {0}")]
    Singular(String),
    #[error("not enough data: {0}")]
    InsufficientData(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
