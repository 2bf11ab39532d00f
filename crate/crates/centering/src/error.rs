//! Error taxonomy shared across the crate.
//!
//! Validation errors describe bad input (a corpus that violates the schema or
//! the annotation contract); structure errors describe impossible discourse
//! configurations discovered at run time (a return pop whose target is not on
//! the stack); contract errors are caller mistakes. The CLI maps validation
//! to exit code 1 and I/O to exit code 2.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input file could not be read or written.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Input was not parseable as the corpus format at all.
    #[error("malformed corpus JSON: {0}")]
    Json(#[from] serde_json::Error),

    /// Parsed input violates the corpus schema. Carries enough location to
    /// find the offending record by hand.
    #[error("schema error at {location}: {message}")]
    Schema { location: String, message: String },

    /// Well-formed input that violates an annotation invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// Engine or run-time configuration is unusable.
    #[error("config error: {0}")]
    Config(String),

    /// Discourse structure operation hit an impossible state.
    #[error("structure error: {0}")]
    Structure(String),

    /// A return pop names no reachable prior segment.
    #[error("dangling return pop before utterance {before}")]
    DanglingReturn { before: usize },

    /// Caller violated an operation precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Cache access to an id that is not resident.
    #[error("cache miss: {0}")]
    CacheMiss(String),

    /// No anchor survived filtering, which the NIL-Cb fallback should prevent.
    #[error("resolution failed at utterance {utterance}: {message}")]
    Resolution { utterance: usize, message: String },
}

impl Error {
    pub fn schema(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            location: location.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
