//! Benchmarks expressed through the client API.
//!
//! Every temporary is released right after the operation that consumes it,
//! the way a Python program drops intermediates at the end of a statement.

use super::graph::Graph;
use super::oracle::BcResult;
use crate::client::{ArrayHandle, Client};
use crate::dtype::{ArrayData, Dtype, Scalar};
use crate::error::{Error, Result};
use crate::ops::{BinOp, UnaryOp};

/// Each triangle {a, b, c} is found once per ordered adjacent pair drawn
/// from it when intersecting full neighbor lists: 3 edges x 2 directions.
pub const SPARSE_TC_OVERCOUNT: i64 = 6;

/// A dense matrix held as one server array per row.
#[derive(Debug)]
pub struct DenseMatrix {
    pub n: usize,
    pub rows: Vec<ArrayHandle>,
    /// Rows of the transpose; `None` for symmetric matrices.
    pub rows_t: Option<Vec<ArrayHandle>>,
    /// Coordinates of the nonzero entries, when known.
    pub nonzeros: Vec<(usize, usize)>,
}

impl DenseMatrix {
    /// Strictly lower-triangular 0/1 adjacency, with its transpose.
    pub fn lower(client: &mut Client, g: &Graph) -> Result<DenseMatrix> {
        let l = g.lower_rows();
        let n = g.n();
        let mut rows = Vec::with_capacity(n);
        let mut rows_t = Vec::with_capacity(n);
        for row in &l {
            rows.push(client.from_values(&ArrayData::Int(row.clone()))?);
        }
        for j in 0..n {
            let col: Vec<i64> = l.iter().map(|row| row[j]).collect();
            rows_t.push(client.from_values(&ArrayData::Int(col))?);
        }
        let nonzeros = g.edges().iter().map(|&(u, v)| (v, u)).collect();
        Ok(DenseMatrix { n, rows, rows_t: Some(rows_t), nonzeros })
    }

    /// Full symmetric float adjacency.
    pub fn adjacency(client: &mut Client, g: &Graph) -> Result<DenseMatrix> {
        let mut rows = Vec::with_capacity(g.n());
        for row in g.adjacency_rows() {
            rows.push(client.from_values(&ArrayData::Float(row))?);
        }
        let nonzeros = g.edges().iter().flat_map(|&(u, v)| [(u, v), (v, u)]).collect();
        Ok(DenseMatrix { n: g.n(), rows, rows_t: None, nonzeros })
    }

    pub fn columns(&self) -> &[ArrayHandle] {
        self.rows_t.as_deref().unwrap_or(&self.rows)
    }

    pub fn release(self, client: &mut Client) -> Result<()> {
        for h in self.rows.into_iter().chain(self.rows_t.into_iter().flatten()) {
            client.release(h)?;
        }
        Ok(())
    }
}

/// Compressed-column and compressed-row forms of a square 0/1 matrix.
#[derive(Debug)]
pub struct SparseGraph {
    pub n: usize,
    pub nnz: usize,
    pub p1: ArrayHandle,
    pub c: ArrayHandle,
    pub p2: ArrayHandle,
    pub r: ArrayHandle,
}

impl SparseGraph {
    /// Full symmetric adjacency of `g`.
    pub fn upload(client: &mut Client, g: &Graph) -> Result<SparseGraph> {
        let (offsets, indices) = g.csr();
        let offsets = ArrayData::Int(offsets);
        let indices = ArrayData::Int(indices);
        Ok(SparseGraph {
            n: g.n(),
            nnz: indices.len(),
            p1: client.from_values(&offsets)?,
            c: client.from_values(&indices)?,
            p2: client.from_values(&offsets)?,
            r: client.from_values(&indices)?,
        })
    }

    pub fn release(self, client: &mut Client) -> Result<()> {
        for h in [self.p1, self.c, self.p2, self.r] {
            client.release(h)?;
        }
        Ok(())
    }
}

fn int_scalar(v: Scalar) -> Result<i64> {
    v.as_i64().ok_or_else(|| Error::Protocol(format!("expected an integer, got {v}")))
}

fn fetch_ints(client: &mut Client, h: &ArrayHandle) -> Result<Vec<i64>> {
    match client.to_values(h)? {
        ArrayData::Int(v) => Ok(v),
        other => Err(Error::Dtype(format!("expected int64 values, got {}", other.dtype()))),
    }
}

/// `sum((L*L) .* L)` with `(L*L)(i,j) = sum(L(i) * Lt(j))`, visiting only
/// the nonzeros of `L`.
pub fn tc_dense(client: &mut Client, l: &DenseMatrix) -> Result<i64> {
    let cols = l.columns();
    if l.rows.len() != l.n || cols.len() != l.n {
        return Err(Error::Size(format!("{} x {} matrix with {} rows", l.n, l.n, l.rows.len())));
    }
    let mut total = 0;
    for &(i, j) in &l.nonzeros {
        let t = client.binop(BinOp::Mul, &l.rows[i], &cols[j])?;
        let s = client.sum(&t);
        client.release(t)?;
        total += int_scalar(s?)?;
    }
    Ok(total)
}

/// Intersects the neighbor list of every node with the neighbor list of each
/// of its neighbors.
pub fn tc_sparse(client: &mut Client, g: &SparseGraph) -> Result<i64> {
    let p1 = fetch_ints(client, &g.p1)?;
    let c = fetch_ints(client, &g.c)?;
    let p2 = fetch_ints(client, &g.p2)?;
    if p1.len() != g.n + 1 || p2.len() != g.n + 1 {
        return Err(Error::Size(format!("offset arrays for {} nodes", g.n)));
    }
    let mut total = 0;
    for i in 0..g.n {
        let (lo, hi) = (p1[i] as usize, p1[i + 1] as usize);
        for &k in &c[lo..hi] {
            let k = k as usize;
            let col = client.slice(&g.c, lo, hi)?;
            let row = client.slice(&g.r, p2[k] as usize, p2[k + 1] as usize)?;
            let common = client.intersect_size(&col, &row);
            client.release(col)?;
            client.release(row)?;
            total += common?;
        }
    }
    Ok(total / SPARSE_TC_OVERCOUNT)
}

/// `out[j] = sum(x * rows[j])`, assembled into one new array.
fn vecmat(client: &mut Client, x: &ArrayHandle, rows: &[ArrayHandle]) -> Result<ArrayHandle> {
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        let t = client.binop(BinOp::Mul, x, row)?;
        let s = client.sum(&t);
        client.release(t)?;
        out.push(s?.as_f64());
    }
    client.from_values(&ArrayData::Float(out))
}

/// Single-source betweenness dependencies by BFS frontiers.
///
/// Forward: `sigma[d] = q; p = p + q; q = (q*A) .* !p` until the frontier
/// sums to zero. Backward, for each depth `i` from the deepest down to 2:
/// `t1 = 1 + delta; t2 = t1 / sigma[i]; t3 = t2 * At; t4 = sigma[i-1] .* t3;
/// delta = delta + t4`.
pub fn bc_single_source(client: &mut Client, a: &DenseMatrix, source: usize) -> Result<BcResult> {
    let n = a.n;
    if source >= n {
        return Err(Error::Argument(format!("source {source} outside 0..{n}")));
    }
    let mut start = vec![0.0; n];
    start[source] = 1.0;
    let mut q = client.from_values(&ArrayData::Float(start))?;
    let mut p = client.zeros(Dtype::Float64, n)?;
    let mut sigma = Vec::new();
    loop {
        sigma.push(client.clone_handle(&q));
        let next_p = client.binop(BinOp::Add, &p, &q)?;
        client.release(std::mem::replace(&mut p, next_p))?;
        let reached = client.binop(BinOp::Gt, &p, 0.0)?;
        let unreached = client.unary(UnaryOp::Lognot, &reached)?;
        client.release(reached)?;
        let product = vecmat(client, &q, a.columns())?;
        let next_q = client.binop(BinOp::Mul, &product, &unreached)?;
        client.release(product)?;
        client.release(unreached)?;
        client.release(std::mem::replace(&mut q, next_q))?;
        if client.sum(&q)?.as_f64() == 0.0 {
            break;
        }
    }
    client.release(q)?;
    let depth = sigma.len();

    let mut delta = client.zeros(Dtype::Float64, n)?;
    for i in (2..depth).rev() {
        let t1 = client.binop(BinOp::Add, 1.0, &delta)?;
        let t2 = client.binop(BinOp::Safediv, &t1, &sigma[i])?;
        client.release(t1)?;
        let t3 = vecmat(client, &t2, &a.rows)?;
        client.release(t2)?;
        let t4 = client.binop(BinOp::Mul, &sigma[i - 1], &t3)?;
        client.release(t3)?;
        let next = client.binop(BinOp::Add, &delta, &t4)?;
        client.release(t4)?;
        client.release(std::mem::replace(&mut delta, next))?;
    }

    let values = client.to_values(&delta)?.to_f64();
    let counts = client.to_values(&p)?.to_f64();
    for h in sigma.into_iter().chain([delta, p]) {
        client.release(h)?;
    }
    let paths = counts
        .into_iter()
        .map(|c| {
            if c >= 0.0 && c.fract() == 0.0 && c < 2f64.powi(53) {
                Ok(c as u64)
            } else {
                Err(Error::Arithmetic(format!("path count {c} is not an exact integer")))
            }
        })
        .collect::<Result<_>>()?;
    Ok(BcResult { delta: values, paths })
}

/// The exploratory sequence `min, max, mean, std, min, min`.
pub fn taxi_chain(client: &mut Client, a: &ArrayHandle) -> Result<[f64; 6]> {
    if a.size() == 0 {
        return Err(Error::Argument("taxi chain needs a non-empty array".into()));
    }
    Ok([
        client.min(a)?.as_f64(),
        client.max(a)?.as_f64(),
        client.mean(a)?,
        client.std(a)?,
        client.min(a)?.as_f64(),
        client.min(a)?.as_f64(),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::graph::{complete, path, star};
    use crate::client::ClientConfig;
    use crate::server::{ArrayServer, ServerConfig};

    fn client(config: ClientConfig) -> Client {
        Client::local(&ArrayServer::new(ServerConfig::default()), config).unwrap()
    }

    #[test]
    fn small_triangle_counts() {
        for config in [ClientConfig::baseline(), ClientConfig::optimized()] {
            let mut c = client(config);
            for (g, want) in [(complete(4), 4), (complete(5), 10), (path(5), 0), (star(6), 0)] {
                let l = DenseMatrix::lower(&mut c, &g).unwrap();
                assert_eq!(tc_dense(&mut c, &l).unwrap(), want);
                l.release(&mut c).unwrap();
                let s = SparseGraph::upload(&mut c, &g).unwrap();
                assert_eq!(tc_sparse(&mut c, &s).unwrap(), want);
                s.release(&mut c).unwrap();
            }
            c.drain_cache().unwrap();
            assert_eq!(c.owned_arrays(), 0);
        }
    }

    #[test]
    fn path_betweenness() {
        let mut c = client(ClientConfig::optimized());
        let a = DenseMatrix::adjacency(&mut c, &path(3)).unwrap();
        let r = bc_single_source(&mut c, &a, 0).unwrap();
        assert_eq!(r.delta, vec![0.0, 1.0, 0.0]);
        assert_eq!(r.paths, vec![1, 1, 1]);
        assert!(bc_single_source(&mut c, &a, 3).is_err());
        a.release(&mut c).unwrap();
    }

    #[test]
    fn constant_taxi_input() {
        let mut c = client(ClientConfig::optimized());
        let a = c.from_values(&ArrayData::Int(vec![5, 5, 5])).unwrap();
        assert_eq!(taxi_chain(&mut c, &a).unwrap(), [5.0, 5.0, 5.0, 0.0, 5.0, 5.0]);
        c.release(a).unwrap();
    }
}
