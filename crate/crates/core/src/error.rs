use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("frame body of {len} bytes exceeds the {max}-byte limit")]
    Oversize { len: usize, max: usize },

    #[error("malformed frame: {0}")]
    Frame(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] io::Error),

    #[error("schema: {0}")]
    Schema(String),

    #[error("dtype: {0}")]
    Dtype(String),

    #[error("size mismatch: {0}")]
    Size(String),

    #[error("out of bounds: {0}")]
    Bounds(String),

    #[error("unknown array id {0}")]
    UnknownArray(String),

    #[error("arithmetic: {0}")]
    Arithmetic(String),

    #[error("resource: {0}")]
    Resource(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    /// An error reply relayed from the server.
    #[error("server: {0}")]
    Server(String),

    #[error("protocol: {0}")]
    Protocol(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}
