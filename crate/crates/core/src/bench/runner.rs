use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::algo::{bc_single_source, taxi_chain, tc_dense, tc_sparse, DenseMatrix, SparseGraph};
use super::graph::{self, Graph};
use super::mtx::load_matrix_market;
use super::oracle::{oracle_bc, oracle_triangles, ORACLE_MAX_NODES};
use crate::client::{Client, ClientConfig};
use crate::dtype::{ArrayData, Dtype};
use crate::error::{Error, Result};
use crate::protocol::FillSpec;
use crate::server::fill;

pub const DENSE_LIMIT: usize = 512;
pub const SPARSE_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Benchmark {
    TcDense,
    TcSparse,
    Bc,
    Taxi,
}

impl Benchmark {
    pub const ALL: [Benchmark; 4] = [Benchmark::TcDense, Benchmark::TcSparse, Benchmark::Bc, Benchmark::Taxi];

    pub fn name(self) -> &'static str {
        match self {
            Benchmark::TcDense => "tc-dense",
            Benchmark::TcSparse => "tc-sparse",
            Benchmark::Bc => "bc",
            Benchmark::Taxi => "taxi",
        }
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Benchmark {
    type Err = Error;

    fn from_str(s: &str) -> Result<Benchmark> {
        Benchmark::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::Argument(format!("unknown benchmark '{s}' (tc-dense, tc-sparse, bc, taxi)")))
    }
}

/// Where benchmark input comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum InputSpec {
    Complete(usize),
    Path(usize),
    Star(usize),
    Gnp { n: usize, p: f64, seed: Option<u64> },
    Rand { n: usize, lo: i64, hi: i64, seed: Option<u64> },
    File(PathBuf),
}

impl FromStr for InputSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<InputSpec> {
        let bad = |why: &str| Error::Argument(format!("bad input '{s}': {why}"));
        let parts: Vec<&str> = s.split(':').collect();
        let num = |i: usize, what: &str| -> Result<usize> {
            parts[i].parse().map_err(|_| bad(&format!("{what} must be a non-negative integer")))
        };
        let seed = |i: usize| -> Result<Option<u64>> {
            parts.get(i).map(|v| v.parse().map_err(|_| bad("seed must be an integer"))).transpose()
        };
        match (parts[0], parts.len()) {
            ("kn", 2) => Ok(InputSpec::Complete(num(1, "N")?)),
            ("path", 2) => Ok(InputSpec::Path(num(1, "N")?)),
            ("star", 2) => Ok(InputSpec::Star(num(1, "N")?)),
            ("gnp", 3 | 4) => {
                let p: f64 = parts[2].parse().map_err(|_| bad("P must be a number"))?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(bad("P must lie in [0, 1]"));
                }
                Ok(InputSpec::Gnp { n: num(1, "N")?, p, seed: seed(3)? })
            }
            ("rand", 4 | 5) => {
                let lo: i64 = parts[2].parse().map_err(|_| bad("LO must be an integer"))?;
                let hi: i64 = parts[3].parse().map_err(|_| bad("HI must be an integer"))?;
                if lo >= hi {
                    return Err(bad("LO must be below HI"));
                }
                Ok(InputSpec::Rand { n: num(1, "N")?, lo, hi, seed: seed(4)? })
            }
            ("kn" | "path" | "star" | "gnp" | "rand", _) => Err(bad("wrong number of fields")),
            _ if s.ends_with(".mtx") => Ok(InputSpec::File(PathBuf::from(s))),
            _ => Err(bad("expected kn:N, path:N, star:N, gnp:N:P:SEED, rand:N:LO:HI:SEED or a .mtx path")),
        }
    }
}

impl InputSpec {
    pub fn graph(&self, default_seed: u64) -> Result<Graph> {
        match self {
            InputSpec::Complete(n) => Ok(graph::complete(*n)),
            InputSpec::Path(n) => Ok(graph::path(*n)),
            InputSpec::Star(n) => Ok(graph::star(*n)),
            InputSpec::Gnp { n, p, seed } => Ok(graph::gnp(*n, *p, seed.unwrap_or(default_seed))),
            InputSpec::File(path) => load_matrix_market(path),
            InputSpec::Rand { .. } => Err(Error::Argument("rand: inputs are arrays, not graphs".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOptions {
    pub source: usize,
    pub seed: u64,
    pub dense_limit: usize,
    pub sparse_limit: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            source: 0,
            seed: 0,
            dense_limit: DENSE_LIMIT,
            sparse_limit: SPARSE_LIMIT,
        }
    }
}

/// Time buckets, all in nanoseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub client_overhead_ns: u64,
    pub marshal_ns: u64,
    pub server_create_ns: u64,
    pub server_delete_ns: u64,
    pub server_compute_ns: u64,
    pub server_overhead_ns: u64,
    pub transport_ns: u64,
    pub wall_ns: u64,
}

impl CostBreakdown {
    pub const CATEGORIES: [&'static str; 7] = [
        "client overhead",
        "marshalling",
        "server create",
        "server delete",
        "server compute",
        "server overhead",
        "transport",
    ];

    pub fn values(&self) -> [u64; 7] {
        [
            self.client_overhead_ns,
            self.marshal_ns,
            self.server_create_ns,
            self.server_delete_ns,
            self.server_compute_ns,
            self.server_overhead_ns,
            self.transport_ns,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub benchmark: Benchmark,
    pub input: String,
    /// `base`, `opt`, or the enabled flags joined by `+`.
    pub mode: String,
    pub flags: ClientConfig,
    pub result: Value,
    /// Agreement with the oracle, when one was run.
    pub verified: Option<bool>,
    /// Agreement with the paired mode, when one was run.
    pub pair_match: Option<bool>,
    pub messages_sent: u64,
    pub arrays_created: u64,
    pub arrays_deleted: u64,
    pub timing: CostBreakdown,
}

impl BenchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    pub fn passed(&self) -> bool {
        self.verified != Some(false) && self.pair_match != Some(false)
    }
}

/// Whether two result documents agree: exactly for integers, within a
/// relative tolerance for floats.
pub fn results_match(a: &Value, b: &Value, rel: f64) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => match (x.as_i64(), y.as_i64()) {
            (Some(x), Some(y)) => x == y,
            _ => {
                let (x, y) = (x.as_f64().unwrap_or(f64::NAN), y.as_f64().unwrap_or(f64::NAN));
                x == y || (x - y).abs() <= rel * x.abs().max(y.abs())
            }
        },
        (Value::Array(x), Value::Array(y)) => {
            x.len() == y.len() && x.iter().zip(y).all(|(x, y)| results_match(x, y, rel))
        }
        (Value::Object(x), Value::Object(y)) => {
            x.len() == y.len() && x.iter().all(|(k, v)| y.get(k).is_some_and(|w| results_match(v, w, rel)))
        }
        _ => a == b,
    }
}

fn check_limit(g: &Graph, limit: usize, what: &str) -> Result<()> {
    if g.n() > limit {
        return Err(Error::Argument(format!("{what} limited to {limit} nodes, input has {}", g.n())));
    }
    Ok(())
}

/// Runs one benchmark on a fresh client session and reports its counters.
/// Arrays left idle in the client's cache are deleted before counting, so
/// every mode ends with an empty server.
pub fn run_benchmark(
    client: &mut Client,
    benchmark: Benchmark,
    input: &str,
    options: &BenchOptions,
) -> Result<BenchReport> {
    let spec: InputSpec = input.parse()?;
    client.reset_metrics();
    let wall = Instant::now();
    let (result, verified) = match benchmark {
        Benchmark::TcDense | Benchmark::TcSparse => {
            let g = spec.graph(options.seed)?;
            let count = if benchmark == Benchmark::TcDense {
                check_limit(&g, options.dense_limit, "dense triangle counting")?;
                let l = DenseMatrix::lower(client, &g)?;
                let count = tc_dense(client, &l);
                l.release(client)?;
                count?
            } else {
                check_limit(&g, options.sparse_limit, "sparse triangle counting")?;
                let s = SparseGraph::upload(client, &g)?;
                let count = tc_sparse(client, &s);
                s.release(client)?;
                count?
            };
            let verified = (g.n() <= ORACLE_MAX_NODES)
                .then(|| oracle_triangles(&g).map(|t| t as i64 == count))
                .transpose()?;
            (json!(count), verified)
        }
        Benchmark::Bc => {
            let g = spec.graph(options.seed)?;
            check_limit(&g, options.sparse_limit, "betweenness")?;
            let a = DenseMatrix::adjacency(client, &g)?;
            let r = bc_single_source(client, &a, options.source);
            a.release(client)?;
            let r = r?;
            let verified = if g.n() <= ORACLE_MAX_NODES {
                let want = oracle_bc(&g, options.source)?;
                Some(
                    want.paths == r.paths
                        && want.delta.iter().zip(&r.delta).all(|(x, y)| (x - y).abs() <= 1e-9),
                )
            } else {
                None
            };
            (json!({ "delta": r.delta, "paths": r.paths }), verified)
        }
        Benchmark::Taxi => {
            let InputSpec::Rand { n, lo, hi, seed } = spec else {
                return Err(Error::Argument("taxi needs a rand:N:LO:HI:SEED input".into()));
            };
            let fill_spec = FillSpec::Randint { lo, hi, seed: seed.unwrap_or(options.seed) };
            let a = client.create(fill_spec.clone(), Dtype::Int64, n)?;
            let got = taxi_chain(client, &a);
            client.release(a)?;
            let got = got?;
            let want = taxi_oracle(&fill(&fill_spec, Dtype::Int64, n)?);
            let verified = got
                .iter()
                .zip(&want)
                .all(|(x, y)| (x - y).abs() <= 1e-9 * y.abs().max(1.0));
            (json!(got), Some(verified))
        }
    };
    client.drain_cache()?;
    let wall_ns = wall.elapsed().as_nanos() as u64;

    let m = client.metrics();
    Ok(BenchReport {
        benchmark,
        input: input.to_string(),
        mode: client.config().label(),
        flags: *client.config(),
        result,
        verified,
        pair_match: None,
        messages_sent: m.messages_sent,
        arrays_created: m.arrays_created,
        arrays_deleted: m.arrays_deleted,
        timing: CostBreakdown {
            client_overhead_ns: m.overhead_ns,
            marshal_ns: m.marshal_ns,
            server_create_ns: m.server_create_ns,
            server_delete_ns: m.server_delete_ns,
            server_compute_ns: m.server_compute_ns,
            server_overhead_ns: m.server_parse_ns,
            transport_ns: m.transport_ns,
            wall_ns,
        },
    })
}

/// Host-side two-pass statistics in the taxi chain's order.
fn taxi_oracle(data: &ArrayData) -> [f64; 6] {
    let v = data.to_f64();
    let n = v.len() as f64;
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    [min, max, mean, var.sqrt(), min, min]
}
