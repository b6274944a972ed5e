use thiserror::Error;

/// Errors shared by every module in the crate.
///
/// The CLI maps these onto its exit-code contract: malformed input and
/// parse failures are usage errors, domain violations (a family that is
/// not superfair, a word that does not pseudo-mix, ...) are rejections,
/// and `InternalContradiction` / `NumericalFailure` signal a bug or a
/// numeric threshold breakdown that should never occur on valid input.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("unknown symbol {0:?}")]
    UnknownSymbol(String),

    #[error("entry at {location} is negative: {value}")]
    NotNonNegative { location: String, value: String },

    #[error("family is not superfair: basis row {row} has letter-sum {sum} > alphabet size")]
    NotSuperfair { row: usize, sum: String },

    #[error("vectors have different supports")]
    SupportMismatch,

    #[error("zero vector not allowed here")]
    ZeroVector,

    #[error("matrix must be strictly positive")]
    NotPositive,

    #[error("degenerate selection: {0}")]
    DegenerateSelection(String),

    #[error("set is not a member of the non-null bottom component")]
    NotInBscc,

    #[error("word does not pseudo-mix the given set")]
    NotPseudoMixing,

    #[error("strong-connectedness assumption does not hold for this family")]
    StarViolated,

    #[error("sequence exhausted: needed {needed} symbols, got {got}")]
    SequenceTooShort { needed: usize, got: usize },

    #[error("unsupported base {0} (need at least 2)")]
    UnsupportedBase(usize),

    #[error("every canonical direction is non-betting; live contraction is undefined")]
    DegenerateLiveCone,

    #[error("no usable signal for a rate fit: {0}")]
    NoSignal(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("internal contradiction: {0}")]
    InternalContradiction(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
