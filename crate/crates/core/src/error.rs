use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent caller input.
    #[error("invalid input: {0}")]
    Input(String),

    /// A conditioning event of probability zero.
    #[error("impossible context: {0}")]
    ImpossibleContext(String),

    /// The request exceeds an enumeration or memory budget.
    #[error("capacity exceeded: {what} needs {needed}, budget is {budget}")]
    Capacity {
        what: &'static str,
        needed: f64,
        budget: f64,
    },

    /// A probability left [0, 1] by more than round-off, or a normalizer failed.
    #[error("numerical inconsistency: {0}")]
    Numerical(String),

    /// H(X_K) = 0 so normalized leakage is undefined.
    #[error("sensitive positions are deterministic under the model")]
    DegenerateSensitive,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub(crate) fn capacity(what: &'static str, needed: f64, budget: f64) -> Self {
        Error::Capacity {
            what,
            needed,
            budget,
        }
    }
}
