use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DslError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("unknown identifier `{name}` at {line}:{col}")]
    UnknownIdentifier { name: String, line: usize, col: usize },
    #[error("weight mapping index {index} out of range 0..=4 at {line}:{col}")]
    MappingIndex { index: u32, line: usize, col: usize },
    #[error("type error: {0}")]
    Type(String),
    #[error("free variable `{0}`")]
    FreeVariable(String),
    #[error("symbol `{0}` has no entry in the cost table")]
    MissingSymbol(String),
}
