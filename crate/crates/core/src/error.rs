use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("line {line}: predicate `{predicate}` used with arity {found}, previously {declared}")]
    ArityConflict {
        line: usize,
        predicate: String,
        declared: usize,
        found: usize,
    },

    #[error("line {line}: fact `{fact}` contains a variable")]
    NonGroundFact { line: usize, fact: String },

    #[error("predicate `{0}` is not declared in the knowledge base")]
    VocabularyMismatch(String),

    #[error("oracle enumeration exceeded the work limit of {limit} steps")]
    WorkLimitExceeded { limit: u64 },

    #[error("no definition for hidden predicate `{0}`")]
    UnknownHiddenPredicate(String),

    #[error("atom `{atom}` has {found} arguments but the definition head has {expected}")]
    ArityMismatch {
        atom: String,
        expected: usize,
        found: usize,
    },

    #[error("unknown quality measure `{0}` (expected mdl, sparsity or fact_compression)")]
    UnknownMeasure(String),

    #[error("invalid language bias: {0}")]
    InvalidBias(String),

    #[error("invalid definition: {0}")]
    InvalidDefinition(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub(crate) fn syntax(line: usize, message: impl Into<String>) -> Self {
        Error::Syntax {
            line,
            message: message.into(),
        }
    }
}
