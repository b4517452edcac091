use thiserror::Error;

/// Errors raised anywhere in the crate.
///
/// [`Error::is_domain`] separates numerical/runtime failures (a valid input that
/// cannot be evaluated) from malformed input.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("node {node}: predecessor {pred} is not strictly earlier")]
    Cycle { node: usize, pred: usize },
    #[error("node {node}: predecessor index {pred} out of range")]
    BadIndex { node: usize, pred: usize },
    #[error("node {node}: {op} expects {expected} arguments, got {got}")]
    Arity { node: usize, op: String, expected: String, got: usize },
    #[error("node {node}: computation node with empty predecessor list")]
    EmptyPredecessor { node: usize },
    #[error("program shape: {0}")]
    Shape(String),
    #[error("node {node}: {op} is not priced by the cost scheme")]
    UnpricedOp { node: usize, op: String },
    #[error("program has {0} outputs, a single output is required")]
    MultiOutput(usize),
    #[error("node {node}: {op} undefined at {arg}")]
    Domain { node: usize, op: String, arg: String },
    #[error("node {node}: {op} has no exact evaluation")]
    InexactOp { node: usize, op: String },
    #[error("node {node}: no selection derivative registered for {op}")]
    NoSelection { node: usize, op: String },
    #[error("node {node}: custom op {name} is not registered")]
    UnknownCustom { node: usize, name: String },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("selection policy: {0}")]
    Policy(String),
    #[error("choice {index} = {value} outside [0, 1]")]
    ChoiceOutOfRange { index: usize, value: String },
    #[error("expected {expected} zero-activation choices, got {got}")]
    IndexMismatch { expected: usize, got: usize },
    #[error("node {node}: {op} is outside the {{add, sub, relu}} dictionary")]
    UnsupportedOp { node: usize, op: String },
    #[error("weight {value} at layer {layer} is not in {{-1, 0, 1}}")]
    NonTernaryWeight { layer: usize, value: String },
    #[error("enumeration budget exceeded: {needed} variables > {budget}")]
    BudgetExceeded { needed: usize, budget: usize },
    #[error("clause {clause} has {width} literals, exactly 3 are required")]
    Width { clause: usize, width: usize },
    #[error("singular matrix")]
    Singular,
    #[error("sign constraint violated for direction {0}")]
    ConstraintViolated(usize),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("randomized search found no nonzero value in {0} trials")]
    SearchExhausted(usize),
    #[error("unknown subprogram reference {0:?}")]
    UnknownReference(String),
}

impl Error {
    /// Runtime failures on well-formed input (exit code 1 in the CLI).
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Error::Domain { .. }
                | Error::InexactOp { .. }
                | Error::NoSelection { .. }
                | Error::UnknownCustom { .. }
                | Error::BudgetExceeded { .. }
                | Error::Singular
                | Error::ConstraintViolated(_)
                | Error::SearchExhausted(_)
        )
    }

    /// Node index carried by the error, if any.
    pub fn node(&self) -> Option<usize> {
        match self {
            Error::Cycle { node, .. }
            | Error::BadIndex { node, .. }
            | Error::Arity { node, .. }
            | Error::EmptyPredecessor { node }
            | Error::UnpricedOp { node, .. }
            | Error::Domain { node, .. }
            | Error::InexactOp { node, .. }
            | Error::NoSelection { node, .. }
            | Error::UnknownCustom { node, .. }
            | Error::UnsupportedOp { node, .. } => Some(*node),
            _ => None,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
