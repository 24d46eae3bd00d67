use thiserror::Error;

/// Errors raised while parsing, building or solving a circuit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("singular matrix: pivot in column {column} below threshold")]
    SingularMatrix { column: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("line {line}: syntax error: {reason}")]
    Syntax { line: usize, reason: String },

    #[error("line {line}: unknown element kind `{kind}`")]
    UnknownElementKind { line: usize, kind: String },

    #[error("line {line}: duplicate port number {num}")]
    DuplicatePort { line: usize, num: u32 },

    #[error("line {line}: bad value for `{key}`: {reason}")]
    BadValue {
        line: usize,
        key: String,
        reason: String,
    },

    #[error("netlist has no ports")]
    NoPorts,

    #[error("ports use different reference impedances")]
    MixedReferenceImpedance,

    #[error("invalid netlist: {0}")]
    Invalid(String),

    #[error("reflection undefined: impedance equals -z0")]
    ReflectionPole,

    #[error("frequency must be positive, got {0}")]
    BadFrequency(f64),

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("empty input")]
    EmptyInput,

    #[error("configuration word {word} at {f_hz} Hz: {source}")]
    AtState {
        word: u16,
        f_hz: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_state(self, word: u16, f_hz: f64) -> Self {
        match self {
            e @ Error::AtState { .. } => e,
            e => Error::AtState {
                word,
                f_hz,
                source: Box::new(e),
            },
        }
    }
}
