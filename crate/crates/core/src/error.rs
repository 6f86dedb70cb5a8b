use std::path::PathBuf;

use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown item label `{0}`")]
    UnknownLabel(String),
    #[error("item {0} appears more than once in the ranking")]
    DuplicateItem(String),
    #[error("ranking contains an empty group")]
    EmptyGroup,
    #[error("ranking must rank at least one item")]
    EmptyRanking,
    #[error("item index {item} out of range for a universe of {size} items")]
    ItemOutOfRange { item: usize, size: usize },
    #[error("duplicate universe label `{0}`")]
    DuplicateLabel(String),
    #[error("universe must contain at least one item")]
    EmptyUniverse,
    #[error("rankings are defined over different item universes")]
    UniverseMismatch,
    #[error("level labels must be strictly decreasing and match the number of groups")]
    InvalidLevels,
    #[error("ranking carries no level labels")]
    MissingLevels,
    #[error("item {0} is already ranked")]
    AlreadyRanked(usize),
    #[error("slot {0} is out of range")]
    SlotOutOfRange(String),
    #[error("enumeration over {n} items exceeds the bound of {bound}")]
    TooLarge { n: usize, bound: usize },
    #[error("permutation sizes differ ({0} vs {1})")]
    SizeMismatch(usize, usize),
    #[error("not a permutation: {0}")]
    InvalidPermutation(String),
    #[error("invalid bandwidth {h}: {reason}")]
    InvalidBandwidth { h: f64, reason: String },
    #[error("distance {t} out of range 0..={max}")]
    DistanceOutOfRange { t: u64, max: u64 },
    #[error("training set is empty")]
    EmptyTraining,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("event does not refine the conditioning event")]
    NotRefinement,
    #[error("conditioning event has non-positive probability {0}")]
    NonPositiveDenominator(f64),
    #[error("constraints are contradictory")]
    Contradictory,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("{bad} of {total} lines malformed, above the allowed rate {cap}")]
    TooManyMalformed { bad: usize, total: usize, cap: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
