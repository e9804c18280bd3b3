//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// A kinematic precondition failed (e.g. a speed at or beyond c).
    #[error("domain error: {0}")]
    Domain(String),

    /// A proposition or query referenced a variable the scenario never declares.
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    /// A variable would be determined more than once.
    #[error("variable `{0}` is determined more than once")]
    DuplicateVariable(String),

    /// A connective was applied to the wrong number of operands.
    #[error("connective `{kind}` expects {expected} operand(s), got {got}")]
    ArityMismatch {
        kind: &'static str,
        expected: usize,
        got: usize,
    },

    /// Conditioning on (or projecting onto) an outcome of probability zero.
    #[error("zero-probability conditioning: {0}")]
    ZeroProbability(String),

    /// A probability table failed validation.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// Malformed probability literal.
    #[error("cannot parse `{0}` as a probability")]
    BadProbability(String),

    /// Register/qubit bookkeeping errors in the quantum module.
    #[error("qubit index {index} out of range for a {n_qubits}-qubit register")]
    QubitIndex { index: usize, n_qubits: usize },

    #[error("register size mismatch: {0} vs {1} qubits")]
    DimensionMismatch(usize, usize),

    #[error("invalid quantum state: {0}")]
    InvalidState(String),

    /// Scenario document failed to parse.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// Scenario parsed but violated a semantic rule.
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    /// Failure while evaluating a single query (recorded per entry in reports).
    #[error("query error: {0}")]
    Query(String),
}
