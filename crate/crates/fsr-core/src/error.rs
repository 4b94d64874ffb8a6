//! Error type shared by every stage of the pruning pipeline.

use core::fmt;

/// Alias used throughout the crate.
pub type Result<T> = core::result::Result<T, Error>;

/// Everything that can go wrong while validating inputs or running a stage.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Two vectors (or a vector and a matrix axis) disagree in length.
    DimensionMismatch { expected: usize, actual: usize },
    /// An input contained NaN or an infinity.
    NonFinite,
    /// An operation that requires at least one element received none.
    EmptyInput,
    /// A token index is outside `[0, N)`.
    IndexOutOfBounds { index: usize, len: usize },
    /// An index set contained the same index twice.
    DuplicateIndex { index: usize },
    /// The saliency mode in the config does not match the attention input variant.
    AttentionModeMismatch,
    /// A self-attention map must be square.
    NotSquare { rows: usize, cols: usize },
    /// Attention entries must be non-negative.
    NegativeAttention,
    /// Relevance mode is `Query` but no query embedding was supplied.
    MissingQuery,
    /// The query embedding has zero norm.
    ZeroNormQuery,
    /// A configuration field is out of range.
    InvalidConfig(&'static str),
    /// More scan picks requested than unselected tokens remain.
    BudgetTooLarge { requested: usize, available: usize },
    /// The exhaustive oracle would enumerate too many subsets.
    OracleTooLarge { combinations: u128, limit: u128 },
    /// A distance-to-set query needs a non-empty anchor set.
    EmptyAnchorSet,
    /// Anchor assignment needs a non-empty scan set.
    EmptyScanSet,
    /// Coverage and quality metrics need a non-empty selection.
    EmptySelection,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, actual } => {
                write!(f, "dimension mismatch: expected {expected}, got {actual}")
            }
            Error::NonFinite => write!(f, "input contains a non-finite value"),
            Error::EmptyInput => write!(f, "input is empty"),
            Error::IndexOutOfBounds { index, len } => {
                write!(f, "index {index} out of bounds for {len} tokens")
            }
            Error::DuplicateIndex { index } => write!(f, "duplicate index {index}"),
            Error::AttentionModeMismatch => {
                write!(f, "attention input does not match the configured saliency mode")
            }
            Error::NotSquare { rows, cols } => {
                write!(f, "self-attention map must be square, got {rows}x{cols}")
            }
            Error::NegativeAttention => write!(f, "attention entries must be non-negative"),
            Error::MissingQuery => write!(f, "relevance mode is query but no query was given"),
            Error::ZeroNormQuery => write!(f, "query embedding has zero norm"),
            Error::InvalidConfig(what) => write!(f, "invalid config: {what}"),
            Error::BudgetTooLarge { requested, available } => {
                write!(f, "requested {requested} scan picks but only {available} tokens remain")
            }
            Error::OracleTooLarge { combinations, limit } => {
                write!(
                    f,
                    "oracle would enumerate {combinations} subsets (limit {limit})"
                )
            }
            Error::EmptyAnchorSet => write!(f, "anchor set is empty"),
            Error::EmptyScanSet => write!(f, "scan set is empty"),
            Error::EmptySelection => write!(f, "selection is empty"),
        }
    }
}

impl core::error::Error for Error {}
