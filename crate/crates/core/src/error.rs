use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An input asks for more work or memory than the operation supports.
    #[error("{what} = {requested} exceeds the supported bound {bound}")]
    Resource {
        what: &'static str,
        requested: u128,
        bound: u128,
    },

    /// A stated precondition does not hold for the given arguments.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A digit constraint is malformed or incompatible with the base.
    #[error("invalid constraint: {0}")]
    Constraint(String),

    /// The requested estimator is not implemented for this constraint kind.
    #[error("unsupported estimator: {0}")]
    Unsupported(String),

    /// A computation produced a non-finite intermediate value.
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    /// A fit was requested over an empty sample.
    #[error("empty grid passed to {0}")]
    EmptyGrid(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// A cached prime table failed validation on load.
    #[error("corrupt prime table: {0}")]
    BadCache(String),
}

pub type Result<T> = std::result::Result<T, Error>;
