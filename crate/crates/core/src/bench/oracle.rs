//! Direct host-side reference computations.

use std::collections::VecDeque;

use super::graph::Graph;
use crate::error::{Error, Result};

pub const ORACLE_MAX_NODES: usize = 256;

fn guard(g: &Graph) -> Result<()> {
    if g.n() > ORACLE_MAX_NODES {
        return Err(Error::Argument(format!(
            "oracle limited to {ORACLE_MAX_NODES} nodes, graph has {}",
            g.n()
        )));
    }
    Ok(())
}

/// Counts triangles by checking every vertex triple.
#[allow(clippy::needless_range_loop)]
pub fn oracle_triangles(g: &Graph) -> Result<u64> {
    guard(g)?;
    let n = g.n();
    let mut adj = vec![vec![false; n]; n];
    for &(u, v) in g.edges() {
        adj[u][v] = true;
        adj[v][u] = true;
    }
    let mut count = 0;
    for a in 0..n {
        for b in a + 1..n {
            if !adj[a][b] {
                continue;
            }
            for c in b + 1..n {
                if adj[a][c] && adj[b][c] {
                    count += 1;
                }
            }
        }
    }
    Ok(count)
}

/// Single-source dependencies and shortest-path counts.
#[derive(Debug, Clone, PartialEq)]
pub struct BcResult {
    pub delta: Vec<f64>,
    pub paths: Vec<u64>,
}

/// Single-source Brandes accumulation: BFS path counts, then dependencies
/// in reverse BFS order. The source's own dependency is left at zero.
pub fn oracle_bc(g: &Graph, source: usize) -> Result<BcResult> {
    guard(g)?;
    let n = g.n();
    if source >= n {
        return Err(Error::Argument(format!("source {source} outside 0..{n}")));
    }
    let adj = g.adjacency();
    let mut dist = vec![usize::MAX; n];
    let mut paths = vec![0u64; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::from([source]);
    dist[source] = 0;
    paths[source] = 1;
    while let Some(v) = queue.pop_front() {
        order.push(v);
        for &w in &adj[v] {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
            if dist[w] == dist[v] + 1 {
                paths[w] += paths[v];
            }
        }
    }
    let mut delta = vec![0.0; n];
    for &w in order.iter().rev() {
        for &v in &adj[w] {
            if dist[v] != usize::MAX && dist[w] == dist[v] + 1 && v != source {
                delta[v] += paths[v] as f64 / paths[w] as f64 * (1.0 + delta[w]);
            }
        }
    }
    Ok(BcResult { delta, paths })
}
