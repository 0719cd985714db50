use thiserror::Error;

/// Errors raised by the library. Every variant is a caller mistake
/// (usage error) or a malformed input file.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("point {0:?} lies outside the domain")]
    OutOfDomain(Vec<f64>),
    #[error("sample set is empty")]
    EmptySampleSet,
    #[error("need at least {needed} samples, have {have}")]
    TooFewSamples { needed: usize, have: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("voronoi index is stale: built for {index_len} samples (checksum {index_sum:#x}), sample set has {set_len} (checksum {set_sum:#x})")]
    StaleIndex {
        index_len: usize,
        index_sum: u64,
        set_len: usize,
        set_sum: u64,
    },
    #[error("malformed image: {0}")]
    Image(String),
    #[error("malformed csv: {0}")]
    Csv(String),
    #[error("cannot parse selector {0:?}: {1}")]
    Selector(String, String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
