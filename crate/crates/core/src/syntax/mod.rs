//! Text formats: problem files, proof files and interpolant output.

mod reader;
pub mod sexp;

use thiserror::Error;

pub use reader::{parse_proof, Document, Reader};
pub use sexp::Pos;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{pos}: {message}")]
pub struct SyntaxError {
    pub pos: Pos,
    pub message: String,
}

impl SyntaxError {
    pub fn new(pos: Pos, message: impl Into<String>) -> SyntaxError {
        SyntaxError {
            pos,
            message: message.into(),
        }
    }
}
