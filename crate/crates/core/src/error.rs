use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution parameter: {0}")]
    InvalidDistribution(String),

    #[error("cannot parse distribution spec `{spec}`: {reason}")]
    DistributionSpec { spec: String, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("vertex ({0}, {1}) lies outside the materialized wedge of horizon {2}")]
    OutsideWedge(usize, usize, usize),

    #[error("unknown experiment family `{0}`")]
    UnknownFamily(String),

    #[error("unsatisfiable stopping baseline: {0}")]
    UnsatisfiableBaseline(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("records from different experiment configurations cannot be aggregated ({0} vs {1})")]
    MixedConfig(String, String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
