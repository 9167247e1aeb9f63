use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("degenerate alphabet: need at least 2 symbols, got {0}")]
    DegenerateAlphabet(usize),

    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),

    #[error("undecodable block `{0}`")]
    Undecodable(String),

    #[error("codeword table is not prefix-free: `{0}` is a prefix of `{1}`")]
    NotPrefixFree(String, String),

    #[error("enumeration budget exceeded: {needed} terms > budget {budget}")]
    BudgetExceeded { needed: u128, budget: u64 },

    #[error("randomness source failed: {0}")]
    Randomness(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: expected {expected} bits, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("parameter mismatch: {0}")]
    ParamMismatch(String),

    #[error("malformed envelope: {0}")]
    Envelope(String),

    #[error("malformed key: {0}")]
    Key(String),
}

pub(crate) fn check_budget(needed: u128, budget: u64) -> Result<()> {
    if needed > budget as u128 {
        Err(Error::BudgetExceeded { needed, budget })
    } else {
        Ok(())
    }
}
