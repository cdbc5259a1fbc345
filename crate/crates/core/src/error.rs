use thiserror::Error;

use crate::orders::FinBits;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("string {0} is not a node of the tree")]
    NotInTree(FinBits),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("tuple of length {got} exceeds code arity {arity}")]
    Arity { arity: usize, got: usize },

    #[error("coordinate {coord}: {node} is not accepted by the condition")]
    NotAccepted { coord: usize, node: FinBits },

    #[error("modulus violation: {context}")]
    Modulus { context: String },

    #[error("search cap exhausted at stage {stage} for front tuple {tuple} after extension depth {depth}")]
    SearchExhausted { stage: usize, tuple: String, depth: usize },

    #[error("greedy stage {stage}: {source}")]
    GreedyStage {
        stage: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("certificate violation: member {member} agrees with f at n = {n} beyond its bound {bound}")]
    Certificate { member: usize, n: u64, bound: u64 },

    #[error("domination failure: g*({k}) = {g} < m_{k} = {m}")]
    Domination { k: usize, g: u64, m: u64 },

    #[error("g* is not strictly increasing at {k}")]
    NotIncreasing { k: usize },

    #[error("prefix is not a coherent encoding: {0}")]
    Coherence(String),

    #[error("value too large to encode: {0}")]
    Overflow(&'static str),

    #[error("invalid input: {0}")]
    Schema(String),
}

impl Error {
    /// Search-cap exhaustion, possibly wrapped by a greedy stage.
    pub fn is_search_exhausted(&self) -> bool {
        match self {
            Error::SearchExhausted { .. } => true,
            Error::GreedyStage { source, .. } => source.is_search_exhausted(),
            _ => false,
        }
    }
}
