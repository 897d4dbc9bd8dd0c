//! The optimizing client.
//!
//! Operations on [`ArrayHandle`]s are appended to a command buffer instead of
//! being sent. A value is computed only when something observable needs it
//! (a fetch, a reduction, a flush, or buffer overflow). At that point the
//! defining command and its transitive inputs execute in issue order, and
//! each execution may
//!
//! * bind to a previously computed identical expression (CSE),
//! * write into an input array whose last reader is this command (store reuse),
//! * write into an idle array from the free list (array cache),
//!
//! before falling back to allocating a fresh server array. Released handles
//! whose commands never ran are dropped from the buffer together with any
//! inputs only they were keeping alive.
//!
//! Every optimization is a [`ClientConfig`] switch; with all of them off the
//! client behaves like a plain eager proxy.

mod buffer;
mod cache;
mod config;
mod freelist;
mod metrics;
mod transport;

use std::collections::{HashMap, HashSet};
use std::net::ToSocketAddrs;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Instant;

use serde::de::DeserializeOwned;

pub use buffer::{BufferCommand, ClientId, CmdKind, CommandBuffer, Input};
pub use cache::{ExprCache, ExprKey, OpKey, OperandKey, ReduceCache};
pub use config::{ClientConfig, DEFAULT_BUCKET_CAP, DEFAULT_BUFFER_CAP, DEFAULT_IDLE_ELEMENTS, FLAG_NAMES};
pub use freelist::FreeList;
pub use metrics::{ClientMetrics, MetricsReport};
pub use transport::{LocalTransport, TcpTransport, Transport};

use crate::dtype::{ArrayData, Dtype, Scalar};
use crate::error::{Error, Result};
use crate::ops::{BinOp, ReduceOp, UnaryOp};
use crate::protocol::{
    decode_body, encode_frame, ArrayPayload, Command, EmptyPayload, FetchPayload, FillSpec,
    IdPayload, OperandRef, Reply, Request, ServerId, ServerMetrics, SessionPayload, ValuePayload,
};
use crate::server::{fill_fits, ArrayServer};

static NEXT_CLIENT: AtomicU64 = AtomicU64::new(1);

/// A user reference to a client array. Obtained from [`Client`] operations
/// and given back with [`Client::release`].
#[derive(Debug)]
#[must_use = "handles must be released to free server arrays"]
pub struct ArrayHandle {
    id: ClientId,
    client: u64,
    dtype: Dtype,
    size: usize,
}

impl ArrayHandle {
    pub fn id(&self) -> ClientId {
        self.id
    }

    pub fn dtype(&self) -> Dtype {
        self.dtype
    }

    pub fn size(&self) -> usize {
        self.size
    }
}

/// A binop operand: an array handle or an inline scalar.
#[derive(Debug, Clone, Copy)]
pub enum Operand<'a> {
    Array(&'a ArrayHandle),
    Scalar(Scalar),
}

impl<'a> From<&'a ArrayHandle> for Operand<'a> {
    fn from(h: &'a ArrayHandle) -> Self {
        Operand::Array(h)
    }
}

impl From<Scalar> for Operand<'_> {
    fn from(s: Scalar) -> Self {
        Operand::Scalar(s)
    }
}

impl From<i64> for Operand<'_> {
    fn from(v: i64) -> Self {
        Operand::Scalar(Scalar::Int(v))
    }
}

impl From<f64> for Operand<'_> {
    fn from(v: f64) -> Self {
        Operand::Scalar(Scalar::Float(v))
    }
}

impl From<bool> for Operand<'_> {
    fn from(v: bool) -> Self {
        Operand::Scalar(Scalar::Bool(v))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RecordState {
    /// Waiting on the buffer command with this index.
    Deferred(u64),
    Materialized(ServerId),
    /// Its server array was taken over as a store destination; the record
    /// only lives until its last pending reader finishes.
    Detached,
}

#[derive(Debug, Clone)]
struct Record {
    dtype: Dtype,
    size: usize,
    state: RecordState,
    /// Server array version this record's value corresponds to.
    version: u64,
    user_refs: u32,
    /// Unexecuted buffer commands reading this record, counted per operand.
    pending_refs: u32,
    last_use: Option<u64>,
}

#[derive(Debug)]
struct ArrayInfo {
    dtype: Dtype,
    size: usize,
    version: u64,
    /// Records currently bound to this array; empty while idle in the free list.
    bound: Vec<ClientId>,
}

pub struct Client {
    nonce: u64,
    transport: Box<dyn Transport>,
    config: ClientConfig,
    session_id: u64,
    next_tag: u64,
    next_client_id: u64,
    records: HashMap<ClientId, Record>,
    buffer: CommandBuffer,
    arrays: HashMap<ServerId, ArrayInfo>,
    freelist: FreeList,
    exprs: ExprCache,
    reductions: ReduceCache,
    metrics: ClientMetrics,
    trace: Option<Vec<Command>>,
    api_depth: u32,
    api_start: Option<Instant>,
    api_ns: u64,
}

impl Client {
    /// Connects over TCP.
    pub fn connect(addr: impl ToSocketAddrs, config: ClientConfig) -> Result<Client> {
        Client::with_transport(Box::new(TcpTransport::connect(addr)?), config)
    }

    /// Connects to an in-process server.
    pub fn local(server: &Arc<ArrayServer>, config: ClientConfig) -> Result<Client> {
        Client::with_transport(Box::new(LocalTransport::new(server)), config)
    }

    pub fn with_transport(transport: Box<dyn Transport>, config: ClientConfig) -> Result<Client> {
        let nonce = NEXT_CLIENT.fetch_add(1, Ordering::Relaxed);
        let mut client = Client {
            nonce,
            transport,
            config,
            session_id: 0,
            next_tag: 1,
            next_client_id: 1,
            records: HashMap::new(),
            buffer: CommandBuffer::default(),
            arrays: HashMap::new(),
            freelist: FreeList::new(config.freelist_bucket_cap, config.freelist_idle_elements),
            exprs: ExprCache::default(),
            reductions: ReduceCache::default(),
            metrics: ClientMetrics::default(),
            trace: None,
            api_depth: 0,
            api_start: None,
            api_ns: 0,
        };
        let session: SessionPayload = client.send(Command::Connect {
            client_name: format!("lazyarr-{nonce}"),
        })?;
        client.session_id = session.session_id;
        Ok(client)
    }

    pub fn config(&self) -> &ClientConfig {
        &self.config
    }

    pub fn session_id(&self) -> u64 {
        self.session_id
    }

    // ---- array construction -------------------------------------------------

    /// Creates an array of `size` elements. Lazy clients send nothing yet.
    pub fn create(&mut self, fill: FillSpec, dtype: Dtype, size: usize) -> Result<ArrayHandle> {
        self.timed(|c| {
            if !fill_fits(&fill, dtype) {
                return Err(Error::Argument(format!("fill {fill:?} does not fit {dtype}")));
            }
            match &fill {
                FillSpec::Values { data } if data.len() != size => {
                    return Err(Error::Argument(format!(
                        "{} values for an array of size {size}",
                        data.len()
                    )));
                }
                FillSpec::Randint { lo, hi, .. } if lo >= hi => {
                    return Err(Error::Argument(format!("randint needs lo < hi, got [{lo}, {hi})")));
                }
                _ => {}
            }
            c.issue(CmdKind::Create { fill }, Vec::new(), dtype, size)
        })
    }

    pub fn randint(&mut self, lo: i64, hi: i64, size: usize, seed: u64) -> Result<ArrayHandle> {
        self.create(FillSpec::Randint { lo, hi, seed }, Dtype::Int64, size)
    }

    pub fn zeros(&mut self, dtype: Dtype, size: usize) -> Result<ArrayHandle> {
        let value = match dtype {
            Dtype::Int64 => Scalar::Int(0),
            Dtype::Float64 => Scalar::Float(0.0),
            Dtype::Bool => Scalar::Bool(false),
        };
        self.create(FillSpec::Const { value }, dtype, size)
    }

    pub fn arange(&mut self, size: usize) -> Result<ArrayHandle> {
        self.create(FillSpec::Arange, Dtype::Int64, size)
    }

    pub fn from_values(&mut self, data: &ArrayData) -> Result<ArrayHandle> {
        self.create(
            FillSpec::Values { data: data.to_scalars() },
            data.dtype(),
            data.len(),
        )
    }

    pub fn binop<'a>(
        &mut self,
        op: BinOp,
        left: impl Into<Operand<'a>>,
        right: impl Into<Operand<'a>>,
    ) -> Result<ArrayHandle> {
        let (left, right) = (left.into(), right.into());
        self.timed(|c| {
            let mut size = None;
            let mut inputs = Vec::with_capacity(2);
            let mut dtypes = [Dtype::Int64; 2];
            for (i, operand) in [left, right].into_iter().enumerate() {
                match operand {
                    Operand::Array(h) => {
                        c.check_handle(h)?;
                        if let Some(n) = size {
                            if n != h.size {
                                return Err(Error::Size(format!(
                                    "{op} of arrays with sizes {n} and {}",
                                    h.size
                                )));
                            }
                        }
                        size = Some(h.size);
                        dtypes[i] = h.dtype;
                        inputs.push(Input::Array(h.id));
                    }
                    Operand::Scalar(s) => {
                        dtypes[i] = s.dtype();
                        inputs.push(Input::Scalar(s));
                    }
                }
            }
            let size = size.ok_or_else(|| {
                Error::Argument(format!("{op} needs at least one array operand"))
            })?;
            let dtype = op.result_dtype(dtypes[0], dtypes[1])?;
            c.issue(CmdKind::Binop(op), inputs, dtype, size)
        })
    }

    pub fn unary(&mut self, op: UnaryOp, a: &ArrayHandle) -> Result<ArrayHandle> {
        self.timed(|c| {
            c.check_handle(a)?;
            let dtype = op.result_dtype(a.dtype)?;
            c.issue(CmdKind::Unary(op), vec![Input::Array(a.id)], dtype, a.size)
        })
    }

    /// Copy of the half-open range `[start, stop)`.
    pub fn slice(&mut self, a: &ArrayHandle, start: usize, stop: usize) -> Result<ArrayHandle> {
        self.timed(|c| {
            c.check_handle(a)?;
            if start > stop || stop > a.size {
                return Err(Error::Bounds(format!(
                    "slice [{start}, {stop}) of an array of size {}",
                    a.size
                )));
            }
            c.issue(
                CmdKind::Slice { start, stop },
                vec![Input::Array(a.id)],
                a.dtype,
                stop - start,
            )
        })
    }

    /// A second user reference to the same array.
    pub fn clone_handle(&mut self, h: &ArrayHandle) -> ArrayHandle {
        let rec = self.records.get_mut(&h.id).expect("live handle has a record");
        rec.user_refs += 1;
        ArrayHandle {
            id: h.id,
            client: h.client,
            dtype: h.dtype,
            size: h.size,
        }
    }

    /// Drops a user reference. Unused deferred work is discarded and unused
    /// server arrays go back to the free list (or are deleted).
    pub fn release(&mut self, h: ArrayHandle) -> Result<()> {
        self.timed(|c| {
            c.check_handle(&h)?;
            let rec = c.records.get_mut(&h.id).expect("live handle has a record");
            rec.user_refs -= 1;
            c.reclaim(vec![h.id])
        })
    }

    // ---- observation --------------------------------------------------------

    /// Forces the array to exist on the server and returns its server id.
    pub fn materialize(&mut self, h: &ArrayHandle) -> Result<ServerId> {
        self.timed(|c| {
            c.check_handle(h)?;
            c.materialize_id(h.id)
        })
    }

    pub fn reduce(&mut self, op: ReduceOp, a: &ArrayHandle) -> Result<Scalar> {
        self.timed(|c| {
            c.check_handle(a)?;
            let sid = c.materialize_id(a.id)?;
            let version = c.arrays[&sid].version;
            if c.config.reduce_memo {
                if let Some(v) = c.reductions.get(op, &sid, version) {
                    c.metrics.cache_hits_reduce += 1;
                    return Ok(v);
                }
            }
            let payload: ValuePayload = c.send(Command::Reduce { op, a: sid.clone() })?;
            if c.config.reduce_memo {
                c.reductions.insert(op, sid, version, payload.value);
            }
            Ok(payload.value)
        })
    }

    pub fn sum(&mut self, a: &ArrayHandle) -> Result<Scalar> {
        self.reduce(ReduceOp::Sum, a)
    }

    pub fn min(&mut self, a: &ArrayHandle) -> Result<Scalar> {
        self.reduce(ReduceOp::Min, a)
    }

    pub fn max(&mut self, a: &ArrayHandle) -> Result<Scalar> {
        self.reduce(ReduceOp::Max, a)
    }

    /// `sum(a) / size`.
    pub fn mean(&mut self, a: &ArrayHandle) -> Result<f64> {
        self.timed(|c| {
            if !a.dtype.is_numeric() {
                return Err(Error::Dtype(format!("mean of a {} array", a.dtype)));
            }
            if a.size == 0 {
                return Err(Error::Argument("mean of an empty array".into()));
            }
            Ok(c.reduce(ReduceOp::Sum, a)?.as_f64() / a.size as f64)
        })
    }

    /// Population standard deviation, `sqrt(sum(a*a)/size - mean^2)`.
    pub fn std(&mut self, a: &ArrayHandle) -> Result<f64> {
        self.timed(|c| {
            let mean = c.mean(a)?;
            let squares = c.binop(BinOp::Mul, a, a)?;
            let total = c.reduce(ReduceOp::Sum, &squares);
            c.release(squares)?;
            let var = total?.as_f64() / a.size as f64 - mean * mean;
            Ok(var.max(0.0).sqrt())
        })
    }

    /// Number of distinct values shared by two int64 arrays.
    pub fn intersect_size(&mut self, a: &ArrayHandle, b: &ArrayHandle) -> Result<i64> {
        self.timed(|c| {
            c.check_handle(a)?;
            c.check_handle(b)?;
            let (x, y) = (c.materialize_id(a.id)?, c.materialize_id(b.id)?);
            let payload: ValuePayload = c.send(Command::IntersectSize { a: x, b: y })?;
            payload
                .value
                .as_i64()
                .ok_or_else(|| Error::Protocol("intersect_size returned a non-integer".into()))
        })
    }

    /// Fetches every element. Not cached: each call sends a fetch.
    pub fn to_values(&mut self, a: &ArrayHandle) -> Result<ArrayData> {
        self.fetch_range(a, None, None)
    }

    pub fn fetch_range(
        &mut self,
        a: &ArrayHandle,
        start: Option<usize>,
        stop: Option<usize>,
    ) -> Result<ArrayData> {
        self.timed(|c| {
            c.check_handle(a)?;
            let sid = c.materialize_id(a.id)?;
            let payload: FetchPayload = c.send(Command::Fetch {
                a: sid,
                start: start.map(|s| s as u64),
                stop: stop.map(|s| s as u64),
            })?;
            ArrayData::from_scalars(payload.dtype, &payload.values)
                .ok_or_else(|| Error::Protocol("fetched values do not match their dtype".into()))
        })
    }

    /// Executes every pending command in issue order.
    pub fn flush(&mut self) -> Result<()> {
        self.timed(|c| {
            while !c.buffer.is_empty() {
                c.execute_oldest()?;
            }
            Ok(())
        })
    }

    // ---- metrics and session management ------------------------------------

    /// Client counters only; sends nothing.
    pub fn metrics(&self) -> ClientMetrics {
        let mut m = self.metrics;
        let inflight = self.api_start.map_or(0, |t| t.elapsed().as_nanos() as u64);
        m.overhead_ns = (self.api_ns + inflight).saturating_sub(m.marshal_ns + m.transport_ns);
        m
    }

    /// Client counters plus a fresh server snapshot (the `stats` request is
    /// not counted as a message).
    pub fn client_metrics(&mut self) -> Result<MetricsReport> {
        let server: ServerMetrics = self.send(Command::Stats {})?;
        Ok(MetricsReport {
            client: self.metrics(),
            server: Some(server),
        })
    }

    pub fn reset_metrics(&mut self) {
        self.metrics = ClientMetrics::default();
        self.api_ns = 0;
    }

    pub fn reset_server_stats(&mut self) -> Result<()> {
        let _: EmptyPayload = self.send(Command::ResetStats {})?;
        Ok(())
    }

    /// Asks the server process to stop accepting connections.
    pub fn shutdown_server(&mut self) -> Result<()> {
        let _: EmptyPayload = self.send(Command::Shutdown {})?;
        Ok(())
    }

    /// Runs any buffered work, then deletes every idle array held in the
    /// free list.
    pub fn drain_cache(&mut self) -> Result<()> {
        self.flush()?;
        for id in self.freelist.drain() {
            self.delete_server(id)?;
        }
        Ok(())
    }

    /// Records every counted request from now on.
    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn trace(&self) -> &[Command] {
        self.trace.as_deref().unwrap_or(&[])
    }

    pub fn take_trace(&mut self) -> Vec<Command> {
        self.trace.as_mut().map(std::mem::take).unwrap_or_default()
    }

    // ---- introspection ------------------------------------------------------

    pub fn pending_commands(&self) -> usize {
        self.buffer.len()
    }

    pub fn buffer(&self) -> &CommandBuffer {
        &self.buffer
    }

    /// Client records alive, including shadows kept for pending readers.
    pub fn live_records(&self) -> usize {
        self.records.len()
    }

    /// Server arrays owned by this session, bound or idle.
    pub fn owned_arrays(&self) -> usize {
        self.arrays.len()
    }

    pub fn idle_arrays(&self) -> usize {
        self.freelist.len()
    }

    pub fn state(&self, h: &ArrayHandle) -> Option<RecordState> {
        self.records.get(&h.id).map(|r| r.state.clone())
    }

    pub fn server_id(&self, h: &ArrayHandle) -> Option<ServerId> {
        match self.state(h)? {
            RecordState::Materialized(s) => Some(s),
            _ => None,
        }
    }

    /// Checks the bookkeeping invariants; returns a description of the first
    /// violation found.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        for (id, rec) in &self.records {
            match &rec.state {
                RecordState::Deferred(idx) => match self.buffer.get(*idx) {
                    Some(cmd) if cmd.output == *id => {}
                    _ => return Err(format!("{id} is deferred on missing command {idx}")),
                },
                RecordState::Materialized(s) => {
                    let info = self.arrays.get(s).ok_or(format!("{id} bound to unknown {s}"))?;
                    if !info.bound.contains(id) {
                        return Err(format!("{s} does not list its binding {id}"));
                    }
                    if info.version != rec.version {
                        return Err(format!("{id} expects {s} v{}, array is v{}", rec.version, info.version));
                    }
                }
                RecordState::Detached => {
                    if rec.pending_refs == 0 {
                        return Err(format!("detached {id} has no pending readers"));
                    }
                }
            }
            let pending: u32 = self.buffer.iter().map(|c| c.reads(*id)).sum();
            if pending != rec.pending_refs {
                return Err(format!("{id} pending_refs {} but {pending} readers", rec.pending_refs));
            }
            if rec.last_use != self.buffer.last_reader(*id) {
                return Err(format!("{id} last_use {:?} is stale", rec.last_use));
            }
            if rec.user_refs == 0 && rec.pending_refs == 0 && !matches!(rec.state, RecordState::Deferred(_)) {
                return Err(format!("{id} is unreachable but not reclaimed"));
            }
        }
        for (s, info) in &self.arrays {
            let idle = self.freelist.contains(s);
            if idle && !info.bound.is_empty() {
                return Err(format!("idle {s} is bound to {:?}", info.bound));
            }
            if !idle && info.bound.is_empty() {
                return Err(format!("{s} is neither bound nor idle"));
            }
            for c in &info.bound {
                match self.records.get(c).map(|r| &r.state) {
                    Some(RecordState::Materialized(x)) if x == s => {}
                    _ => return Err(format!("{s} lists stale binding {c}")),
                }
            }
        }
        for (key, s, v) in self.exprs.iter() {
            if self.arrays.get(s).map(|i| i.version) != Some(v) {
                return Err(format!("stale expression entry {key:?} -> {s} v{v}"));
            }
        }
        Ok(())
    }

    // ---- internals ----------------------------------------------------------

    fn timed<R>(&mut self, f: impl FnOnce(&mut Self) -> R) -> R {
        if self.api_depth == 0 {
            self.api_start = Some(Instant::now());
        }
        self.api_depth += 1;
        let out = f(self);
        self.api_depth -= 1;
        if self.api_depth == 0 {
            if let Some(t) = self.api_start.take() {
                self.api_ns += t.elapsed().as_nanos() as u64;
            }
        }
        out
    }

    fn check_handle(&self, h: &ArrayHandle) -> Result<()> {
        if h.client != self.nonce {
            return Err(Error::Argument(format!("{} belongs to another client", h.id)));
        }
        Ok(())
    }

    fn send<P: DeserializeOwned>(&mut self, command: Command) -> Result<P> {
        let counted = !matches!(
            command,
            Command::Connect { .. } | Command::Stats {} | Command::ResetStats {} | Command::Shutdown {}
        );
        let allocates = command.allocates();
        let deletes = matches!(command, Command::Delete { .. });
        if counted {
            let m = &mut self.metrics;
            m.messages_sent += 1;
            match &command {
                Command::Create { .. } | Command::CreateStore { .. } => m.creates_sent += 1,
                Command::Delete { .. } => m.deletes_sent += 1,
                Command::Fetch { .. } => m.fetches_sent += 1,
                Command::Reduce { .. } => m.reduces_sent += 1,
                _ => {}
            }
            if command.is_store() {
                m.stores_sent += 1;
            }
            if let Some(trace) = &mut self.trace {
                trace.push(command.clone());
            }
        }

        let tag = self.next_tag;
        self.next_tag += 1;
        let t = Instant::now();
        let frame = encode_frame(&Request { tag, command })?;
        self.metrics.marshal_ns += t.elapsed().as_nanos() as u64;

        let t = Instant::now();
        let body = self.transport.round_trip(&frame)?;
        let round_trip = t.elapsed().as_nanos() as u64;

        let t = Instant::now();
        let reply: Reply = decode_body(&body)?;
        self.metrics.marshal_ns += t.elapsed().as_nanos() as u64;

        if reply.tag != tag {
            return Err(Error::Protocol(format!("reply tag {} for request {tag}", reply.tag)));
        }
        let m = &mut self.metrics;
        m.transport_ns += round_trip.saturating_sub(reply.timing.total());
        m.server_parse_ns += reply.timing.parse_ns;
        m.server_create_ns += reply.timing.create_ns;
        m.server_delete_ns += reply.timing.delete_ns;
        m.server_compute_ns += reply.timing.compute_ns;

        let payload = reply.into_payload::<P>()?;
        if allocates {
            self.metrics.arrays_created += 1;
        }
        if deletes {
            self.metrics.arrays_deleted += 1;
        }
        Ok(payload)
    }

    fn issue(
        &mut self,
        kind: CmdKind,
        inputs: Vec<Input>,
        dtype: Dtype,
        size: usize,
    ) -> Result<ArrayHandle> {
        if self.config.lazy {
            while self.buffer.len() >= self.config.buffer_cap.max(1) {
                self.execute_oldest()?;
            }
        }
        let id = ClientId(self.next_client_id);
        self.next_client_id += 1;
        for input in &inputs {
            if let Input::Array(c) = input {
                let rec = self.records.get_mut(c).expect("input has a record");
                rec.pending_refs += 1;
            }
        }
        let index = self.buffer.push(kind, inputs, id);
        for c in self.buffer.get(index).expect("just pushed").distinct_inputs() {
            self.records.get_mut(&c).expect("input has a record").last_use = Some(index);
        }
        self.records.insert(
            id,
            Record {
                dtype,
                size,
                state: RecordState::Deferred(index),
                version: 0,
                user_refs: 1,
                pending_refs: 0,
                last_use: None,
            },
        );
        self.metrics.buffer_peak = self.metrics.buffer_peak.max(self.buffer.len() as u64);
        let handle = ArrayHandle {
            id,
            client: self.nonce,
            dtype,
            size,
        };
        if !self.config.lazy {
            if let Err(e) = self.materialize_id(id) {
                self.rollback(index);
                return Err(e);
            }
        }
        Ok(handle)
    }

    /// Undoes an eagerly issued command whose execution failed.
    fn rollback(&mut self, index: u64) {
        if let Some(cmd) = self.buffer.remove(index) {
            self.records.remove(&cmd.output);
            self.drop_reads(&cmd);
        }
    }

    /// Decrements the pending reads of a command leaving the buffer.
    fn drop_reads(&mut self, cmd: &BufferCommand) {
        for c in cmd.array_inputs() {
            if let Some(rec) = self.records.get_mut(&c) {
                rec.pending_refs -= 1;
            }
        }
        for c in cmd.distinct_inputs() {
            let last = self.buffer.last_reader(c);
            if let Some(rec) = self.records.get_mut(&c) {
                rec.last_use = if rec.pending_refs == 0 { None } else { last };
            }
        }
    }

    /// Executes the oldest buffered command. Its output may be reclaimed
    /// right away when no handle or reader is left.
    fn execute_oldest(&mut self) -> Result<()> {
        let out = self.buffer.oldest().expect("non-empty buffer").output;
        match self.records[&out].state {
            RecordState::Deferred(index) => self.execute(index),
            ref state => Err(Error::Protocol(format!("buffered {out} is {state:?}"))),
        }
    }

    fn materialize_id(&mut self, id: ClientId) -> Result<ServerId> {
        let rec = self
            .records
            .get(&id)
            .ok_or_else(|| Error::Argument(format!("{id} was already reclaimed")))?;
        let root = match &rec.state {
            RecordState::Materialized(s) => return Ok(s.clone()),
            RecordState::Detached => {
                return Err(Error::Protocol(format!("{id} was detached from its array")))
            }
            RecordState::Deferred(idx) => *idx,
        };
        for index in self.dependencies(root) {
            self.execute(index)?;
        }
        match &self.records[&id].state {
            RecordState::Materialized(s) => Ok(s.clone()),
            state => Err(Error::Protocol(format!("{id} still {state:?} after execution"))),
        }
    }

    /// Indices of `root` and every unexecuted command it transitively reads,
    /// in issue order.
    fn dependencies(&self, root: u64) -> Vec<u64> {
        let mut seen = HashSet::new();
        let mut stack = vec![root];
        while let Some(idx) = stack.pop() {
            if !seen.insert(idx) {
                continue;
            }
            let cmd = self.buffer.get(idx).expect("deferred command is buffered");
            for c in cmd.array_inputs() {
                if let RecordState::Deferred(j) = self.records[&c].state {
                    stack.push(j);
                }
            }
        }
        let mut order: Vec<u64> = seen.into_iter().collect();
        order.sort_unstable();
        order
    }

    fn execute(&mut self, index: u64) -> Result<()> {
        let cmd = self.buffer.get(index).expect("command is buffered").clone();
        let (dtype, size) = {
            let out = &self.records[&cmd.output];
            (out.dtype, out.size)
        };

        let mut refs = Vec::with_capacity(cmd.inputs.len());
        let mut keys = Vec::with_capacity(cmd.inputs.len());
        for input in &cmd.inputs {
            match input {
                Input::Array(c) => {
                    let RecordState::Materialized(s) = &self.records[c].state else {
                        return Err(Error::Protocol(format!("input {c} is not materialized")));
                    };
                    keys.push(OperandKey::Array(s.clone(), self.arrays[s].version));
                    refs.push(OperandRef::Array(s.clone()));
                }
                Input::Scalar(v) => {
                    keys.push(OperandKey::scalar(*v));
                    refs.push(OperandRef::Scalar(*v));
                }
            }
        }

        let cse_key = (self.config.cse && cmd.kind.is_deterministic()).then(|| {
            let op = match &cmd.kind {
                CmdKind::Create { fill } => OpKey::Create {
                    dtype,
                    size,
                    fill: serde_json::to_string(fill).expect("fill serializes"),
                },
                CmdKind::Binop(op) => OpKey::Binop(*op),
                CmdKind::Unary(op) => OpKey::Unary(*op),
                CmdKind::Slice { start, stop } => OpKey::Slice {
                    start: *start,
                    stop: *stop,
                },
            };
            ExprKey::new(op, keys)
        });

        if let Some(key) = &cse_key {
            if let Some((s, v)) = self.exprs.get(key).cloned() {
                if self.arrays.get(&s).map(|i| i.version) == Some(v) {
                    if self.arrays[&s].bound.is_empty() {
                        self.freelist.remove(&s, size, dtype);
                    }
                    self.bind(cmd.output, &s);
                    self.metrics.cache_hits_expr += 1;
                    return self.finish(index);
                }
            }
        }

        let mut dest = None;
        let mut reused_input = false;
        if self.config.store_reuse && matches!(cmd.kind, CmdKind::Binop(_) | CmdKind::Unary(_)) {
            dest = self.store_target(&cmd, dtype, size);
            reused_input = dest.is_some();
        }
        if dest.is_none() && self.config.array_cache {
            dest = self.freelist.pop(size, dtype);
            if dest.is_some() {
                self.metrics.freelist_hits += 1;
            }
        }
        if let (true, Some(d)) = (reused_input, &dest) {
            debug_assert!(
                self.premature_overwrite(index, d).is_none(),
                "store into {d} while {:?} still reads it",
                self.premature_overwrite(index, d)
            );
        }

        let result = self.send_command(&cmd, refs, dest.clone(), dtype, size);
        let sid = match result {
            Ok(s) => s,
            Err(e) => {
                if let (false, Some(d)) = (reused_input, dest) {
                    for evicted in self.freelist.push(d, size, dtype) {
                        self.delete_server(evicted)?;
                    }
                }
                return Err(e);
            }
        };

        if dest.is_some() {
            self.exprs.evict(&sid);
            self.reductions.evict(&sid);
            let info = self.arrays.get_mut(&sid).expect("store target is owned");
            info.version += 1;
            for c in std::mem::take(&mut info.bound) {
                self.records.get_mut(&c).expect("bound record").state = RecordState::Detached;
            }
        } else {
            self.arrays.insert(
                sid.clone(),
                ArrayInfo {
                    dtype,
                    size,
                    version: 0,
                    bound: Vec::new(),
                },
            );
        }
        self.bind(cmd.output, &sid);
        if let Some(key) = cse_key {
            let self_referential = key
                .operands
                .iter()
                .any(|k| matches!(k, OperandKey::Array(s, _) if *s == sid));
            if !self_referential {
                let version = self.arrays[&sid].version;
                self.exprs.insert(key, sid, version);
            }
        }
        self.finish(index)
    }

    fn send_command(
        &mut self,
        cmd: &BufferCommand,
        mut refs: Vec<OperandRef>,
        dest: Option<ServerId>,
        dtype: Dtype,
        size: usize,
    ) -> Result<ServerId> {
        let array_arg = |r: OperandRef| match r {
            OperandRef::Array(s) => s,
            OperandRef::Scalar(_) => unreachable!("unary and slice inputs are arrays"),
        };
        let command = match (&cmd.kind, dest) {
            (CmdKind::Create { fill }, None) => Command::Create {
                dtype,
                size: size as u64,
                fill: fill.clone(),
            },
            (CmdKind::Create { fill }, Some(dest)) => Command::CreateStore {
                dest,
                fill: fill.clone(),
            },
            (CmdKind::Binop(op), dest) => {
                let right = refs.pop().expect("two operands");
                let left = refs.pop().expect("two operands");
                match dest {
                    None => Command::Binop { op: *op, left, right },
                    Some(dest) => Command::BinopStore { op: *op, left, right, dest },
                }
            }
            (CmdKind::Unary(op), dest) => {
                let a = array_arg(refs.pop().expect("one operand"));
                match dest {
                    None => Command::Unary { op: *op, a },
                    Some(dest) => Command::UnaryStore { op: *op, a, dest },
                }
            }
            (CmdKind::Slice { start, stop }, dest) => {
                let a = array_arg(refs.pop().expect("one operand"));
                let (start, stop) = (*start as u64, *stop as u64);
                match dest {
                    None => Command::Slice { a, start, stop },
                    Some(dest) => Command::SliceStore { a, start, stop, dest },
                }
            }
        };
        if command.is_store() {
            let payload: IdPayload = self.send(command)?;
            Ok(payload.server_id)
        } else if let Command::Create { .. } = command {
            let payload: IdPayload = self.send(command)?;
            Ok(payload.server_id)
        } else {
            let payload: ArrayPayload = self.send(command)?;
            if payload.size as usize != size || payload.dtype != dtype {
                return Err(Error::Protocol(format!(
                    "server produced {} x {}, expected {size} x {dtype}",
                    payload.size, payload.dtype
                )));
            }
            Ok(payload.server_id)
        }
    }

    /// Leftmost input whose array may be overwritten by this command: every
    /// record bound to it is released by the user and read by nothing but
    /// this command.
    fn store_target(&self, cmd: &BufferCommand, dtype: Dtype, size: usize) -> Option<ServerId> {
        cmd.distinct_inputs().into_iter().find_map(|c| {
            let rec = &self.records[&c];
            let RecordState::Materialized(s) = &rec.state else {
                return None;
            };
            let info = &self.arrays[s];
            if info.dtype != dtype || info.size != size || rec.last_use != Some(cmd.index) {
                return None;
            }
            let all_dying = info.bound.iter().all(|b| {
                let r = &self.records[b];
                r.user_refs == 0 && r.pending_refs == cmd.reads(*b)
            });
            all_dying.then(|| s.clone())
        })
    }

    /// An unexecuted command other than `index` that reads `dest`, if any.
    fn premature_overwrite(&self, index: u64, dest: &ServerId) -> Option<u64> {
        let bound = &self.arrays.get(dest)?.bound;
        self.buffer
            .iter()
            .find(|c| c.index != index && bound.iter().any(|b| c.reads(*b) > 0))
            .map(|c| c.index)
    }

    fn bind(&mut self, id: ClientId, sid: &ServerId) {
        let info = self.arrays.get_mut(sid).expect("bound array is owned");
        info.bound.push(id);
        let version = info.version;
        let rec = self.records.get_mut(&id).expect("bound record exists");
        rec.state = RecordState::Materialized(sid.clone());
        rec.version = version;
    }

    fn finish(&mut self, index: u64) -> Result<()> {
        let cmd = self.buffer.remove(index).expect("finished command was buffered");
        self.drop_reads(&cmd);
        let mut work = cmd.distinct_inputs();
        work.push(cmd.output);
        self.reclaim(work)
    }

    /// Reclaims every record in `work` (and, transitively, inputs of dead
    /// deferred commands) that has no user references and no pending readers.
    fn reclaim(&mut self, mut work: Vec<ClientId>) -> Result<()> {
        while let Some(id) = work.pop() {
            let Some(rec) = self.records.get(&id) else {
                continue;
            };
            if rec.user_refs > 0 || rec.pending_refs > 0 {
                continue;
            }
            match rec.state.clone() {
                RecordState::Deferred(index) => {
                    if !self.config.dead_elim {
                        continue;
                    }
                    self.records.remove(&id);
                    let cmd = self.buffer.remove(index).expect("deferred command is buffered");
                    self.drop_reads(&cmd);
                    work.extend(cmd.distinct_inputs());
                }
                RecordState::Materialized(sid) => {
                    self.records.remove(&id);
                    let info = self.arrays.get_mut(&sid).expect("bound array is owned");
                    info.bound.retain(|b| *b != id);
                    if info.bound.is_empty() {
                        self.retire(sid)?;
                    }
                }
                RecordState::Detached => {
                    self.records.remove(&id);
                }
            }
        }
        Ok(())
    }

    /// An array nobody is bound to: keep it idle or delete it.
    fn retire(&mut self, sid: ServerId) -> Result<()> {
        if self.config.array_cache {
            let (size, dtype) = {
                let info = &self.arrays[&sid];
                (info.size, info.dtype)
            };
            for evicted in self.freelist.push(sid, size, dtype) {
                self.delete_server(evicted)?;
            }
            Ok(())
        } else {
            self.delete_server(sid)
        }
    }

    fn delete_server(&mut self, sid: ServerId) -> Result<()> {
        self.arrays.remove(&sid);
        self.exprs.evict(&sid);
        self.reductions.evict(&sid);
        let _: EmptyPayload = self.send(Command::Delete { a: sid })?;
        Ok(())
    }
}
