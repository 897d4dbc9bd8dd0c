//! Request, reply and payload types.

use std::fmt;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::dtype::{Dtype, Scalar};
use crate::error::{Error, Result};
use crate::ops::{BinOp, ReduceOp, UnaryOp};

/// Server-side array name, `"S"` followed by a counter.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ServerId(pub String);

impl ServerId {
    pub fn from_counter(n: u64) -> ServerId {
        ServerId(format!("S{n}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ServerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ServerId {
    fn from(s: &str) -> Self {
        ServerId(s.to_string())
    }
}

/// An operand: a server array, or an inline typed scalar.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OperandRef {
    Array(ServerId),
    Scalar(Scalar),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OperandWire {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    array: Option<ServerId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scalar: Option<Scalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dtype: Option<Dtype>,
}

impl Serialize for OperandRef {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let wire = match self {
            OperandRef::Array(id) => OperandWire {
                array: Some(id.clone()),
                scalar: None,
                dtype: None,
            },
            OperandRef::Scalar(v) => OperandWire {
                array: None,
                scalar: Some(*v),
                dtype: Some(v.dtype()),
            },
        };
        wire.serialize(s)
    }
}

impl<'de> Deserialize<'de> for OperandRef {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let wire = OperandWire::deserialize(d)?;
        match (wire.array, wire.scalar, wire.dtype) {
            (Some(id), None, None) => Ok(OperandRef::Array(id)),
            (None, Some(v), Some(dtype)) => v
                .cast(dtype)
                .map(OperandRef::Scalar)
                .ok_or_else(|| D::Error::custom(format!("scalar {v} is not a valid {dtype}"))),
            (None, Some(_), None) => Err(D::Error::custom("scalar operand needs a dtype")),
            _ => Err(D::Error::custom(
                "operand must have exactly one of `array` or `scalar`",
            )),
        }
    }
}

/// How a new array is initialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FillSpec {
    /// Uniform integers in `[lo, hi)` from a seeded generator.
    Randint { lo: i64, hi: i64, seed: u64 },
    Const { value: Scalar },
    Arange,
    Values { data: Vec<Scalar> },
}

impl FillSpec {
    /// True when the fill is a pure function of its arguments for caching purposes.
    pub fn is_deterministic(&self) -> bool {
        !matches!(self, FillSpec::Randint { .. })
    }
}

/// The closed command vocabulary. On the wire: `"cmd": <name>, "args": {...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "cmd", content = "args", rename_all = "snake_case")]
pub enum Command {
    Connect {
        client_name: String,
    },
    Create {
        dtype: Dtype,
        size: u64,
        fill: FillSpec,
    },
    CreateStore {
        dest: ServerId,
        fill: FillSpec,
    },
    Binop {
        op: BinOp,
        left: OperandRef,
        right: OperandRef,
    },
    BinopStore {
        op: BinOp,
        left: OperandRef,
        right: OperandRef,
        dest: ServerId,
    },
    Unary {
        op: UnaryOp,
        a: ServerId,
    },
    UnaryStore {
        op: UnaryOp,
        a: ServerId,
        dest: ServerId,
    },
    Reduce {
        op: ReduceOp,
        a: ServerId,
    },
    Slice {
        a: ServerId,
        start: u64,
        stop: u64,
    },
    SliceStore {
        a: ServerId,
        start: u64,
        stop: u64,
        dest: ServerId,
    },
    IntersectSize {
        a: ServerId,
        b: ServerId,
    },
    Fetch {
        a: ServerId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        start: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        stop: Option<u64>,
    },
    Delete {
        a: ServerId,
    },
    Stats {},
    ResetStats {},
    Shutdown {},
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Connect { .. } => "connect",
            Command::Create { .. } => "create",
            Command::CreateStore { .. } => "create_store",
            Command::Binop { .. } => "binop",
            Command::BinopStore { .. } => "binop_store",
            Command::Unary { .. } => "unary",
            Command::UnaryStore { .. } => "unary_store",
            Command::Reduce { .. } => "reduce",
            Command::Slice { .. } => "slice",
            Command::SliceStore { .. } => "slice_store",
            Command::IntersectSize { .. } => "intersect_size",
            Command::Fetch { .. } => "fetch",
            Command::Delete { .. } => "delete",
            Command::Stats {} => "stats",
            Command::ResetStats {} => "reset_stats",
            Command::Shutdown {} => "shutdown",
        }
    }

    pub fn is_store(&self) -> bool {
        matches!(
            self,
            Command::CreateStore { .. }
                | Command::BinopStore { .. }
                | Command::UnaryStore { .. }
                | Command::SliceStore { .. }
        )
    }

    /// Commands that allocate a fresh server array on success.
    pub fn allocates(&self) -> bool {
        matches!(
            self,
            Command::Create { .. }
                | Command::Binop { .. }
                | Command::Unary { .. }
                | Command::Slice { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub tag: u64,
    #[serde(flatten)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Error,
}

/// Server-side time spent on one request, in nanoseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timing {
    pub parse_ns: u64,
    pub create_ns: u64,
    pub delete_ns: u64,
    pub compute_ns: u64,
}

impl Timing {
    pub fn total(&self) -> u64 {
        self.parse_ns + self.create_ns + self.delete_ns + self.compute_ns
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reply {
    pub tag: u64,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payload: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub timing: Timing,
}

#[derive(Deserialize)]
struct ReplyWire {
    tag: u64,
    status: Status,
    #[serde(default)]
    payload: Option<Value>,
    #[serde(default)]
    error: Option<String>,
    timing: Timing,
}

impl<'de> Deserialize<'de> for Reply {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let w = ReplyWire::deserialize(d)?;
        match w.status {
            Status::Error if w.payload.is_some() => {
                return Err(D::Error::custom("error reply carries a payload"))
            }
            Status::Error if w.error.is_none() => {
                return Err(D::Error::custom("error reply without a message"))
            }
            Status::Ok if w.error.is_some() => {
                return Err(D::Error::custom("ok reply carries an error message"))
            }
            _ => {}
        }
        Ok(Reply {
            tag: w.tag,
            status: w.status,
            payload: w.payload,
            error: w.error,
            timing: w.timing,
        })
    }
}

impl Reply {
    pub fn ok<P: Serialize>(tag: u64, payload: &P, timing: Timing) -> Reply {
        Reply {
            tag,
            status: Status::Ok,
            payload: Some(serde_json::to_value(payload).unwrap_or(Value::Null)),
            error: None,
            timing,
        }
    }

    pub fn error(tag: u64, message: impl Into<String>, timing: Timing) -> Reply {
        Reply {
            tag,
            status: Status::Error,
            payload: None,
            error: Some(message.into()),
            timing,
        }
    }

    /// Converts an ok reply's payload into `P`; error replies become [`Error::Server`].
    pub fn into_payload<P: DeserializeOwned>(self) -> Result<P> {
        match self.status {
            Status::Error => Err(Error::Server(self.error.unwrap_or_default())),
            Status::Ok => {
                let value = self.payload.unwrap_or(Value::Object(Default::default()));
                serde_json::from_value(value)
                    .map_err(|e| Error::Protocol(format!("unexpected payload: {e}")))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionPayload {
    pub session_id: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdPayload {
    pub server_id: ServerId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayPayload {
    pub server_id: ServerId,
    pub size: u64,
    pub dtype: Dtype,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValuePayload {
    pub value: Scalar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FetchPayload {
    pub dtype: Dtype,
    pub values: Vec<Scalar>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EmptyPayload {}

/// Server counters and cumulative timings; the payload of `stats`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServerMetrics {
    pub messages_handled: u64,
    pub arrays_created: u64,
    pub arrays_deleted: u64,
    pub parse_ns: u64,
    pub create_ns: u64,
    pub delete_ns: u64,
    pub compute_ns: u64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::frame::{decode_frame, encode_frame};

    #[test]
    fn request_wire_shape() {
        let req = Request {
            tag: 3,
            command: Command::Binop {
                op: BinOp::Add,
                left: OperandRef::Array("S1".into()),
                right: OperandRef::Scalar(Scalar::Float(1.0)),
            },
        };
        let text = serde_json::to_string(&req).unwrap();
        assert_eq!(
            text,
            r#"{"tag":3,"cmd":"binop","args":{"op":"add","left":{"array":"S1"},"right":{"scalar":1.0,"dtype":"float64"}}}"#
        );
        let shutdown = serde_json::to_string(&Request {
            tag: 0,
            command: Command::Shutdown {},
        })
        .unwrap();
        assert_eq!(shutdown, r#"{"tag":0,"cmd":"shutdown","args":{}}"#);
    }

    #[test]
    fn shutdown_frame_prefix() {
        let req = Request {
            tag: 0,
            command: Command::Shutdown {},
        };
        let frame = encode_frame(&req).unwrap();
        let len = u32::from_be_bytes(frame[..4].try_into().unwrap()) as usize;
        assert_eq!(len, serde_json::to_vec(&req).unwrap().len());
        assert_eq!(decode_frame::<Request>(&frame).unwrap(), req);
    }

    #[test]
    fn operand_requires_exactly_one_variant() {
        let both = r#"{"array":"S1","scalar":1,"dtype":"int64"}"#;
        assert!(serde_json::from_str::<OperandRef>(both).is_err());
        assert!(serde_json::from_str::<OperandRef>("{}").is_err());
        let widened: OperandRef = serde_json::from_str(r#"{"scalar":1,"dtype":"float64"}"#).unwrap();
        assert_eq!(widened, OperandRef::Scalar(Scalar::Float(1.0)));
    }

    #[test]
    fn error_reply_rejects_payload() {
        let bad = r#"{"tag":1,"status":"error","payload":{},"error":"x","timing":{"parse_ns":0,"create_ns":0,"delete_ns":0,"compute_ns":0}}"#;
        assert!(serde_json::from_str::<Reply>(bad).is_err());
    }

    #[test]
    fn unknown_command_is_rejected() {
        let text = r#"{"tag":1,"cmd":"frobnicate","args":{}}"#;
        assert!(serde_json::from_str::<Request>(text).is_err());
    }
}
