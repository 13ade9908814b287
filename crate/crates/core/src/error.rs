use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("no triples")]
    NoTriples,
    #[error("{kind} index {index} out of range for vocabulary of size {len}")]
    IndexOutOfRange {
        kind: &'static str,
        index: u32,
        len: usize,
    },
    #[error("duplicate triple ({0}, {1}, {2})")]
    DuplicateTriple(u32, u32, u32),
    #[error("{kind} {index} does not occur in any triple")]
    UnusedVocabulary { kind: &'static str, index: u32 },
    #[error("valid size {valid_size} must be in 1..{triples}")]
    InvalidValidSize { valid_size: usize, triples: usize },
    #[error("fraction {0} must be in (0, 1]")]
    InvalidFraction(f64),
    #[error("reduction retained no triples")]
    EmptySubgraph,
    #[error("{starts} walk starts requested but the graph has {entities} entities")]
    TooManyStarts { starts: usize, entities: usize },
    #[error("{k}-core is empty; the largest nonempty core is k={max_k}")]
    EmptyCore { k: usize, max_k: usize },
    #[error("invalid embedding dimension {dim}: {reason}")]
    InvalidDimension { dim: usize, reason: &'static str },
    #[error("cannot draw {n} distinct negatives from {entities} entities")]
    TooManyNegatives { n: usize, entities: usize },
    #[error("training diverged in epoch {epoch}: non-finite loss")]
    Diverged { epoch: usize },
    #[error("true entity {0} is in the filter set")]
    FilteredTrueEntity(u32),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("all trials of round {round} failed")]
    RoundFailed { round: usize },
    #[error("vectors have lengths {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("rank correlation undefined: zero rank variance")]
    ZeroVariance,
}
