use thiserror::Error;

/// Failure modes shared by every layer of the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid mode binding: {0}")]
    Binding(String),

    #[error("no route for mode {0}")]
    Routing(String),

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("detector specification cannot resolve {0}")]
    Spec(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("outside the formula domain: {0}")]
    Domain(String),

    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },

    #[error("element {index}: {source}")]
    Element {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Strips any element-index wrappers and returns the underlying error.
    pub fn root(&self) -> &Error {
        match self {
            Error::Element { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
