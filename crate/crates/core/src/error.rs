//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters or inconsistent stage inputs.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A schema violation in an input file, with its line number.
    #[error("{path}:{line}: {message}")]
    Format {
        path: String,
        line: usize,
        message: String,
    },

    /// Detection requires a non-empty graph.
    #[error("graph has no nodes")]
    EmptyGraph,

    /// CoCit normalization is undefined without a citation count.
    #[error("missing citation count for author '{0}'")]
    MissingCitationCount(String),

    /// Ancestor/descendant fractions are undefined on an empty reference set.
    #[error("undefined fraction: {0}")]
    UndefinedFraction(&'static str),

    /// Event scores are defined on specific pair configurations only.
    #[error("invalid community pair: {0}")]
    InvalidPair(String),

    /// Centroids require at least one member.
    #[error("empty member set")]
    EmptyMembers,

    /// A `CommunityRef` that does not exist in the partition sequence.
    #[error("unknown community reference {0}")]
    DanglingRef(crate::CommunityRef),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
