use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("number of blocks must be at least 1, got {0}")]
    NoBlocks(usize),

    #[error("block {block} out of range for a scenario with {n_blocks} blocks")]
    BlockOutOfRange { block: usize, n_blocks: usize },

    #[error("{what} supports at most {max} blocks, got {got}")]
    TooManyBlocks {
        what: &'static str,
        max: usize,
        got: usize,
    },

    #[error("register size mismatch: {left} vs {right} qubits")]
    SizeMismatch { left: usize, right: usize },

    #[error("observable is not Hermitian (phase {0})")]
    NotHermitian(String),

    #[error("invalid stabilizer generators: {0}")]
    InvalidGenerators(String),

    #[error("cannot parse Pauli string {input:?}: {reason}")]
    Parse { input: String, reason: String },

    #[error("term {index} has signed expectation {value}, expected +1")]
    TermMismatch { index: u64, value: f64 },

    #[error("assignment covers {got} blocks, expected {expected}")]
    PartialAssignment { got: usize, expected: usize },

    #[error("parameter {name} = {value} is outside {range}")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("no violation possible: local bound / quantum value ratio {0} exceeds 1")]
    NoViolation(f64),

    #[error("violation impossible at any size: asymptotic ratio {asymptotic} >= visibility {visibility}")]
    ViolationImpossible { asymptotic: f64, visibility: f64 },

    #[error("no violation found for N <= {0}")]
    NotFoundBelowCap(usize),

    #[error("correlation estimate undefined: every pair went undetected on both sides")]
    UndefinedEstimate,
}

pub type Result<T> = std::result::Result<T, Error>;
