use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid manifest {}: {message}", path.display())]
    Manifest { path: PathBuf, message: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-uniform time grid: {0}")]
    NonUniformTimeGrid(String),

    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("energy threshold {threshold} unreachable: spectrum retains at most {reachable}")]
    ThresholdUnreachable { threshold: f64, reachable: f64 },

    #[error("linear solve failed: {0}")]
    SolverFailure(String),

    #[error("ROM integration diverged at time index {index}")]
    Divergence { index: usize },

    #[error("all {0} regularization candidates diverged")]
    AllCandidatesDiverged(usize),

    #[error("training parameters are collinear; no 2-D simplex exists")]
    CollinearParameters,

    #[error("duplicate training parameter {0:?}")]
    DuplicateParameter(Vec<f64>),

    #[error("parameter {0:?} lies outside the convex hull of the training parameters")]
    OutsideHull(Vec<f64>),

    #[error("archive version mismatch: {0}")]
    VersionMismatch(String),

    #[error("corrupted archive: {0}")]
    CorruptArchive(String),

    #[error("degenerate error group `{0}`: reference norm is zero")]
    DegenerateGroup(String),

    #[error("stability limit violated: {0}")]
    StabilityLimit(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::InvalidArgument(_)
            | Error::UnknownVariable(_)
            | Error::CollinearParameters
            | Error::DuplicateParameter(_)
            | Error::OutsideHull(_)
            | Error::LayoutMismatch(_) => 2,
            Error::NonFinite(_)
            | Error::Degenerate(_)
            | Error::ThresholdUnreachable { .. }
            | Error::SolverFailure(_)
            | Error::Divergence { .. }
            | Error::AllCandidatesDiverged(_)
            | Error::DegenerateGroup(_)
            | Error::StabilityLimit(_) => 3,
            Error::Io { .. }
            | Error::Manifest { .. }
            | Error::DimensionMismatch(_)
            | Error::NonUniformTimeGrid(_)
            | Error::VersionMismatch(_)
            | Error::CorruptArchive(_) => 4,
        }
    }
}
