use thiserror::Error;

/// Errors raised by the workbench.
///
/// The variants fall into four families that the command-line driver maps
/// onto distinct exit codes: domain/contract/parse problems (bad input),
/// resource limits, and internal consistency faults.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("variable `{0}` appears in more than one argument")]
    Overlap(String),

    #[error("empty variable selection")]
    EmptySelection,

    #[error("{0}")]
    Domain(String),

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{what} requires {required} terms but the cap is {cap}")]
    Resource { what: String, required: u128, cap: u128 },

    #[error("internal consistency fault: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn resource(what: impl Into<String>, required: u128, cap: u128) -> Self {
        Error::Resource {
            what: what.into(),
            required,
            cap,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
