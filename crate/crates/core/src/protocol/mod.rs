//! Request-reply wire format shared by the client and the server.

mod frame;
mod message;
mod schema;

pub use frame::{decode_body, decode_frame, encode_frame, read_frame, write_frame, MAX_FRAME_LEN};
pub use message::{
    ArrayPayload, Command, EmptyPayload, FetchPayload, FillSpec, IdPayload, OperandRef, Reply,
    Request, ServerId, ServerMetrics, SessionPayload, Status, Timing, ValuePayload,
};
pub use schema::{command_schema, lookup, CommandSpec, FILL_KINDS};
