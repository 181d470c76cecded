use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("graph has no edges")]
    EmptyGraph,

    #[error("vertex {0} is out of range")]
    InvalidVertex(usize),

    #[error("vertex {vertex} is not in the component of root {root}")]
    NotInComponent { root: usize, vertex: usize },

    #[error("target {0} is the tree root")]
    TargetIsRoot(usize),

    #[error("vertex {0} has no tree neighbors")]
    IsolatedVertex(usize),

    #[error("graph is not bipartite: edge {0}-{1} joins two vertices on the same side")]
    NotBipartite(usize, usize),

    #[error("sampler exceeded {cap} steps from root {root}")]
    WalkLimit { root: usize, cap: usize },

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("not enough non-edges: need {needed}, graph has {available}")]
    TooDense { needed: usize, available: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn non_finite(context: impl Into<String>) -> Self {
        Error::NonFinite {
            context: context.into(),
        }
    }
}
