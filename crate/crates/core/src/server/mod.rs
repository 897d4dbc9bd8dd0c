//! Eager array server.
//!
//! The server owns a [`SymbolTable`] of named arrays and executes every
//! command as soon as it arrives. It holds no knowledge of client-side
//! buffering; the `*_store` commands let a client direct a result into an
//! array it already owns.

mod kernels;
mod net;
mod table;

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::Instant;

use serde_json::{json, Value};

pub use kernels::{fill, intersect_size, REDUCE_CHUNK};
pub use net::{serve, ServerHandle};
pub use table::{ServerArray, SymbolTable};

use crate::dtype::Dtype;
use crate::error::{Error, Result};
use crate::protocol::{
    decode_body, ArrayPayload, Command, FetchPayload, FillSpec, IdPayload, OperandRef, Reply,
    Request, ServerId, ServerMetrics, SessionPayload, Timing, ValuePayload,
};
use kernels::Operand;

/// Default total element budget across all live arrays.
pub const DEFAULT_ELEMENT_BUDGET: usize = 1 << 26;

#[derive(Debug, Clone, Copy)]
pub struct ServerConfig {
    pub element_budget: usize,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            element_budget: DEFAULT_ELEMENT_BUDGET,
        }
    }
}

struct State {
    table: SymbolTable,
    metrics: ServerMetrics,
}

/// The executor shared by all sessions. Commands run one at a time under a lock.
pub struct ArrayServer {
    state: Mutex<State>,
    shutdown: AtomicBool,
    next_session: AtomicU64,
}

fn nanos(since: Instant) -> u64 {
    since.elapsed().as_nanos() as u64
}

impl ArrayServer {
    pub fn new(config: ServerConfig) -> Arc<ArrayServer> {
        Arc::new(ArrayServer {
            state: Mutex::new(State {
                table: SymbolTable::new(config.element_budget),
                metrics: ServerMetrics::default(),
            }),
            shutdown: AtomicBool::new(false),
            next_session: AtomicU64::new(1),
        })
    }

    fn lock(&self) -> MutexGuard<'_, State> {
        // A panicking kernel must not wedge every other session.
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn is_shutdown(&self) -> bool {
        self.shutdown.load(Ordering::SeqCst)
    }

    pub fn request_shutdown(&self) {
        self.shutdown.store(true, Ordering::SeqCst);
    }

    /// Opens a session; each network connection owns one.
    pub fn session(self: &Arc<Self>) -> Session {
        Session {
            server: Arc::clone(self),
            last_tag: None,
        }
    }

    pub fn metrics(&self) -> ServerMetrics {
        self.lock().metrics
    }

    /// Number of arrays currently in the symbol table.
    pub fn live_arrays(&self) -> usize {
        self.lock().table.len()
    }

    /// Runs `f` against the symbol table, for inspection in tests and tools.
    pub fn with_table<R>(&self, f: impl FnOnce(&SymbolTable) -> R) -> R {
        f(&self.lock().table)
    }

    /// Executes one parsed command, returning its payload.
    pub fn execute(&self, command: &Command, timing: &mut Timing) -> Result<Value> {
        let mut guard = self.lock();
        let state = &mut *guard;
        state.metrics.messages_handled += 1;
        let before = (state.table.created_count, state.table.deleted_count);
        let result = execute(&mut state.table, command, timing, &self.next_session);
        let m = &mut state.metrics;
        m.arrays_created += state.table.created_count - before.0;
        m.arrays_deleted += state.table.deleted_count - before.1;
        match command {
            Command::ResetStats {} => *m = ServerMetrics::default(),
            Command::Shutdown {} => self.request_shutdown(),
            _ => {}
        }
        m.create_ns += timing.create_ns;
        m.delete_ns += timing.delete_ns;
        m.compute_ns += timing.compute_ns;
        m.parse_ns += timing.parse_ns;
        if let Command::Stats {} = command {
            return Ok(serde_json::to_value(*m)?);
        }
        result
    }
}

/// Per-connection state: tags must strictly increase.
pub struct Session {
    server: Arc<ArrayServer>,
    last_tag: Option<u64>,
}

impl Session {
    pub fn server(&self) -> &Arc<ArrayServer> {
        &self.server
    }

    /// Handles one request body and produces exactly one reply.
    pub fn handle(&mut self, body: &[u8]) -> Reply {
        let start = Instant::now();
        let parsed: Result<Request> = decode_body(body);
        let mut timing = Timing {
            parse_ns: nanos(start),
            ..Timing::default()
        };
        let request = match parsed {
            Ok(r) => r,
            Err(e) => {
                let tag = serde_json::from_slice::<Value>(body)
                    .ok()
                    .and_then(|v| v.get("tag").and_then(Value::as_u64))
                    .unwrap_or(0);
                return Reply::error(tag, format!("bad request: {e}"), timing);
            }
        };
        if let Some(last) = self.last_tag {
            if request.tag <= last {
                return Reply::error(
                    request.tag,
                    format!("tag {} does not follow {last}", request.tag),
                    timing,
                );
            }
        }
        self.last_tag = Some(request.tag);
        match self.server.execute(&request.command, &mut timing) {
            Ok(payload) => Reply {
                tag: request.tag,
                status: crate::protocol::Status::Ok,
                payload: Some(payload),
                error: None,
                timing,
            },
            Err(e) => Reply::error(request.tag, e.to_string(), timing),
        }
    }

    /// Handles a request body and serializes the reply body.
    pub fn handle_bytes(&mut self, body: &[u8]) -> Vec<u8> {
        let reply = self.handle(body);
        serde_json::to_vec(&reply).expect("replies always serialize")
    }
}

fn resolve<'t>(table: &'t SymbolTable, op: &OperandRef) -> Result<Operand<'t>> {
    Ok(match op {
        OperandRef::Array(id) => Operand::Array(&table.get(id)?.data),
        OperandRef::Scalar(s) => Operand::Scalar(*s),
    })
}

fn check_range(size: usize, start: u64, stop: u64) -> Result<(usize, usize)> {
    if start > stop || stop as usize > size {
        return Err(Error::Bounds(format!(
            "range [{start}, {stop}) on an array of size {size}"
        )));
    }
    Ok((start as usize, stop as usize))
}

fn created(id: ServerId, table: &SymbolTable) -> Result<Value> {
    let arr = table.get(&id)?;
    Ok(serde_json::to_value(ArrayPayload {
        size: arr.size() as u64,
        dtype: arr.dtype(),
        server_id: id,
    })?)
}

fn stored(id: &ServerId) -> Result<Value> {
    Ok(serde_json::to_value(IdPayload {
        server_id: id.clone(),
    })?)
}

fn check_dest(table: &SymbolTable, dest: &ServerId, size: usize, dtype: Dtype) -> Result<()> {
    let d = table.get(dest)?;
    if d.size() != size {
        return Err(Error::Size(format!("dest {dest} has size {}, result needs {size}", d.size())));
    }
    if d.dtype() != dtype {
        return Err(Error::Dtype(format!("dest {dest} is {}, result is {dtype}", d.dtype())));
    }
    Ok(())
}

fn execute(
    table: &mut SymbolTable,
    command: &Command,
    timing: &mut Timing,
    sessions: &AtomicU64,
) -> Result<Value> {
    match command {
        Command::Connect { client_name } => {
            let session_id = sessions.fetch_add(1, Ordering::SeqCst);
            log::debug!("session {session_id} opened by {client_name}");
            Ok(serde_json::to_value(SessionPayload { session_id })?)
        }
        Command::Create { dtype, size, fill } => {
            let t = Instant::now();
            let size = *size as usize;
            table.reserve(size)?;
            let data = kernels::fill(fill, *dtype, size)?;
            let id = table.insert(data)?;
            timing.create_ns += nanos(t);
            Ok(json!({ "server_id": id }))
        }
        Command::CreateStore { dest, fill } => {
            let t = Instant::now();
            let d = table.get(dest)?;
            let data = kernels::fill(fill, d.dtype(), d.size())?;
            table.overwrite(dest, data)?;
            timing.compute_ns += nanos(t);
            stored(dest)
        }
        Command::Binop { op, left, right } => {
            let t = Instant::now();
            let data = kernels::binop(*op, resolve(table, left)?, resolve(table, right)?)?;
            timing.compute_ns += nanos(t);
            let t = Instant::now();
            let id = table.insert(data)?;
            timing.create_ns += nanos(t);
            created(id, table)
        }
        Command::BinopStore { op, left, right, dest } => {
            let t = Instant::now();
            let data = kernels::binop(*op, resolve(table, left)?, resolve(table, right)?)?;
            check_dest(table, dest, data.len(), data.dtype())?;
            table.overwrite(dest, data)?;
            timing.compute_ns += nanos(t);
            stored(dest)
        }
        Command::Unary { op, a } => {
            let t = Instant::now();
            let data = kernels::unary(*op, &table.get(a)?.data)?;
            timing.compute_ns += nanos(t);
            let t = Instant::now();
            let id = table.insert(data)?;
            timing.create_ns += nanos(t);
            created(id, table)
        }
        Command::UnaryStore { op, a, dest } => {
            let t = Instant::now();
            let data = kernels::unary(*op, &table.get(a)?.data)?;
            check_dest(table, dest, data.len(), data.dtype())?;
            table.overwrite(dest, data)?;
            timing.compute_ns += nanos(t);
            stored(dest)
        }
        Command::Reduce { op, a } => {
            let t = Instant::now();
            let value = kernels::reduce(*op, &table.get(a)?.data)?;
            timing.compute_ns += nanos(t);
            Ok(serde_json::to_value(ValuePayload { value })?)
        }
        Command::Slice { a, start, stop } => {
            let t = Instant::now();
            let src = table.get(a)?;
            let (start, stop) = check_range(src.size(), *start, *stop)?;
            let data = src.data.slice(start, stop);
            timing.compute_ns += nanos(t);
            let t = Instant::now();
            let id = table.insert(data)?;
            timing.create_ns += nanos(t);
            created(id, table)
        }
        Command::SliceStore { a, start, stop, dest } => {
            if a == dest {
                return Err(Error::Argument(format!("slice_store destination {dest} aliases its source")));
            }
            let t = Instant::now();
            let src = table.get(a)?;
            let (start, stop) = check_range(src.size(), *start, *stop)?;
            let data = src.data.slice(start, stop);
            check_dest(table, dest, data.len(), data.dtype())?;
            table.overwrite(dest, data)?;
            timing.compute_ns += nanos(t);
            stored(dest)
        }
        Command::IntersectSize { a, b } => {
            let t = Instant::now();
            let (x, y) = (table.get(a)?, table.get(b)?);
            let (Some(x), Some(y)) = (x.data.as_int(), y.data.as_int()) else {
                return Err(Error::Dtype("intersect_size requires int64 operands".into()));
            };
            let value = intersect_size(x, y);
            timing.compute_ns += nanos(t);
            Ok(serde_json::to_value(ValuePayload { value: value.into() })?)
        }
        Command::Fetch { a, start, stop } => {
            let t = Instant::now();
            let arr = table.get(a)?;
            let size = arr.size();
            let (start, stop) = check_range(size, start.unwrap_or(0), stop.unwrap_or(size as u64))?;
            let values = arr.data.slice(start, stop).to_scalars();
            let payload = FetchPayload {
                dtype: arr.dtype(),
                values,
            };
            timing.compute_ns += nanos(t);
            Ok(serde_json::to_value(payload)?)
        }
        Command::Delete { a } => {
            let t = Instant::now();
            table.remove(a)?;
            timing.delete_ns += nanos(t);
            Ok(json!({}))
        }
        // Filled in by the caller, which owns the metrics.
        Command::Stats {} | Command::ResetStats {} | Command::Shutdown {} => Ok(json!({})),
    }
}

/// True when `fill` can be applied to an array of `dtype`.
pub fn fill_fits(fill: &FillSpec, dtype: Dtype) -> bool {
    match fill {
        FillSpec::Randint { .. } | FillSpec::Arange => dtype != Dtype::Bool,
        FillSpec::Const { value } => value.cast(dtype).is_some(),
        FillSpec::Values { data } => data.iter().all(|v| v.cast(dtype).is_some()),
    }
}
