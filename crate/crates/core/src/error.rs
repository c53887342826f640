use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown letter `{0}`")]
    UnknownLetter(String),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("letters {0} and {1} are dependent, set is not independent")]
    NotIndependent(String, String),
    #[error("symbol domain mismatch: {0} vs {1} symbols")]
    DomainMismatch(usize, usize),
    #[error("arity mismatch: {0} vs {1}")]
    ArityMismatch(usize, usize),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("precondition not met: {0}")]
    Precondition(String),
    #[error("closure instance cap exhausted (tried up to {0} concurrent instances)")]
    ClosureCapExhausted(usize),
    #[error("closure certificate failed: {0}")]
    Certificate(String),
    #[error("formula error: {0}")]
    Formula(String),
}

pub type Result<T> = std::result::Result<T, Error>;
