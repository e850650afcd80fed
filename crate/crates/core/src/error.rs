use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("zero vector cannot be normalized")]
    ZeroVector,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("embedding must have at least 2 components, got {0}")]
    DimensionTooSmall(usize),

    #[error("embedding component {index} is not finite")]
    NonFinite { index: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("duplicate sample ({subject_id}, {sample_id})")]
    DuplicateSample {
        subject_id: String,
        sample_id: String,
    },

    #[error("inconsistent dimension: dataset is {expected}-dimensional, record has {actual}")]
    InconsistentDimension { expected: usize, actual: usize },

    #[error("invalid record: {0}")]
    InvalidRecord(String),

    #[error("dataset has no bona fide subject")]
    NoBonafideSubject,

    #[error("invalid simulation parameters: {0}")]
    InvalidParams(String),

    #[error("invalid concentration kappa = {0}")]
    InvalidKappa(f64),

    #[error("antipodal pair: angle {0} rad leaves the midpoint undefined")]
    AntipodalPair(f64),

    #[error("invalid interpolation: {0}")]
    InvalidInterpolation(String),

    #[error("need at least 2 bona fide subjects, found {0}")]
    TooFewSubjects(usize),

    #[error("subject {0} not found")]
    MissingSubject(String),

    #[error("subject {0} has no enrollment sample")]
    MissingEnrollment(String),

    #[error("subject {0} has no probe samples")]
    EmptyProbeSet(String),

    #[error("empty population: {0}")]
    EmptyPopulation(String),

    #[error("attack {0} is missing scores for a contributor slot")]
    MalformedAttack(String),

    #[error("attack ids differ between systems {0} and {1}")]
    AttackIdMismatch(String, String),

    #[error("invalid MAP parameters: {0}")]
    InvalidRC(String),

    #[error("invalid thresholds: need 0 <= t_low < t_high <= pi, got ({0}, {1})")]
    InvalidThresholdOrder(f64, f64),

    #[error("invalid target rate {0}, must lie in [0, 1]")]
    InvalidTarget(f64),

    #[error("no candidate threshold reaches {rule} <= {target}")]
    NoFeasibleThreshold { rule: String, target: f64 },

    #[error("invalid score: {0}")]
    InvalidScore(String),

    #[error("unknown system {0}")]
    UnknownSystem(String),

    #[error("{}: {source}", path.display())]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Attaches the file the error came from.
    pub fn in_file(self, path: impl Into<PathBuf>) -> Self {
        Error::InFile {
            path: path.into(),
            source: Box::new(self),
        }
    }

    /// True for failures caused by the caller's parameters rather than data or I/O.
    pub fn is_usage(&self) -> bool {
        match self {
            Error::InvalidParams(_)
            | Error::InvalidKappa(_)
            | Error::InvalidInterpolation(_)
            | Error::InvalidRC(_)
            | Error::InvalidThresholdOrder(..)
            | Error::InvalidTarget(_)
            | Error::UnknownSystem(_) => true,
            Error::InFile { source, .. } => source.is_usage(),
            _ => false,
        }
    }
}
