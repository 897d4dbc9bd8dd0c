//! Deferred-execution array client and eager array server.
//!
//! The server holds named 1-D arrays and executes one operation per request.
//! The [`client`] buffers operations, and only sends what an observable
//! result needs, reusing arrays and results where it can.

pub mod bench;
pub mod client;
pub mod dtype;
pub mod error;
pub mod ops;
pub mod protocol;
pub mod repl;
pub mod report;
pub mod server;

pub use client::{ArrayHandle, Client, ClientConfig, ClientMetrics, Operand};
pub use dtype::{ArrayData, Dtype, Scalar};
pub use error::{Error, Result};
pub use ops::{BinOp, ReduceOp, UnaryOp};
pub use server::{ArrayServer, ServerConfig};
