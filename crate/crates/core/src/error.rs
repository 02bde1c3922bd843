use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("negative probability {value} at category {}", index + 1)]
    NegativeEntry { index: usize, value: f64 },

    #[error("probabilities sum to {sum}, expected 1 (tolerance 1e-9)")]
    SumNotOne { sum: f64 },

    #[error("need at least 2 categories, got {k}")]
    TooFewCategories { k: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite entry {value} at position {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("privacy parameter must be finite and > 0, got epsilon = {epsilon}")]
    InvalidEpsilon { epsilon: f64 },

    #[error("subset has {found} members, mechanism outputs {expected}")]
    WrongSubsetSize { expected: usize, found: usize },

    #[error("category {category} out of range for k = {k}")]
    CategoryOutOfRange { category: usize, k: usize },

    #[error("subset members must be strictly increasing")]
    UnsortedMembers,

    #[error("subset size d = {d} must satisfy 1 <= d <= k - 1 (k = {k})")]
    InvalidD { d: usize, k: usize },

    #[error("output alphabet of size {size} exceeds limit {limit}")]
    AlphabetTooLarge { size: f64, limit: f64 },

    #[error("entry {value} at coordinate {index} lies outside [1, e^eps]")]
    EntryOutOfCube { index: usize, value: f64 },

    #[error("channel is not private: column ratio {ratio} exceeds e^eps = {bound}")]
    NotPrivate { ratio: f64, bound: f64 },

    #[error("channel row {row} is not a probability distribution: {reason}")]
    NotStochastic { row: usize, reason: String },

    #[error("no samples")]
    EmptySample,

    #[error("e^eps is exactly 1; the estimator is undefined")]
    DegenerateBudget,

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("sample size n = {n} must exceed the threshold {threshold}")]
    SampleSizeTooSmall { n: u64, threshold: f64 },

    #[error("k = {k} must be even")]
    OddK { k: usize },

    #[error("t = {t} must lie in 1..={max}")]
    TOutOfRange { t: usize, max: usize },

    #[error("operation not supported for {0}")]
    UnsupportedScheme(&'static str),

    #[error("invalid simulation plan: {0}")]
    InvalidPlan(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for errors that come from a violated mathematical precondition
    /// (as opposed to malformed input).
    pub fn is_hypothesis_violation(&self) -> bool {
        matches!(
            self,
            Error::HypothesisViolated(_)
                | Error::SampleSizeTooSmall { .. }
                | Error::NotPrivate { .. }
                | Error::DegenerateBudget
        )
    }
}
