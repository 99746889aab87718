//! First-order logic front ends for the probabilistic type system: Markov
//! Logic Networks, Dependent Type Networks and translations between them.

pub mod bridge;
pub mod dtn;
pub mod formula;
pub mod ground;
pub mod mln;

use pdts_core::kernel::KernelError;
use pdts_core::prob::ProbError;

#[derive(Debug, thiserror::Error)]
pub enum LogicError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown symbol: {0}")]
    UnknownSymbol(String),
    #[error("`{symbol}` expects {expected} arguments, found {found}")]
    ArityMismatch {
        symbol: String,
        expected: usize,
        found: usize,
    },
    #[error("function table for `{0}` has no entry for these arguments")]
    MissingFunctionTable(String),
    #[error("name `{0}` is declared twice")]
    DuplicateName(String),
    #[error("the domain has no constants")]
    EmptyDomain,
    #[error("{atoms} ground atoms exceed the enumeration cap of {cap}")]
    TooManyWorlds { atoms: usize, cap: usize },
    #[error("{atoms} ground atoms exceed the cap of {cap}")]
    TooManyAtoms { atoms: usize, cap: usize },
    #[error("query program over {size} random choices exceeds the cap of {cap}")]
    ProgramTooLarge { size: usize, cap: usize },
    #[error("invalid weight or probability: {0}")]
    InvalidWeight(String),
    #[error("evidence has probability zero")]
    InconsistentEvidence,
    #[error("every sample was rejected as inconsistent")]
    AllSamplesRejected,
    #[error("world tables differ in atoms: {0}")]
    DimensionMismatch(String),
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

impl LogicError {
    /// Attaches a line number to errors that lack one.
    pub fn at_line(self, line: usize) -> LogicError {
        match self {
            LogicError::Parse { message, .. } => LogicError::Parse { line, message },
            other => LogicError::Parse {
                line,
                message: other.to_string(),
            },
        }
    }
}
