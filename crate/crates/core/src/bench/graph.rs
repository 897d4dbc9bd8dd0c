//! Host-side undirected graphs and generators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Simple undirected graph: no self loops, no duplicate edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    /// Each edge once as `(u, v)` with `u < v`, sorted.
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Normalizes an arbitrary edge list: orientation, self loops and
    /// duplicates are dropped.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Graph> {
        let mut out = Vec::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Argument(format!("edge ({u}, {v}) outside a graph of {n} nodes")));
            }
            if u != v {
                out.push((u.min(v), u.max(v)));
            }
        }
        out.sort_unstable();
        out.dedup();
        Ok(Graph { n, edges: out })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Sorted neighbor lists.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        adj
    }

    /// Compressed rows of the full symmetric adjacency: `(offsets, indices)`.
    /// The matrix is symmetric, so this is also its compressed-column form.
    pub fn csr(&self) -> (Vec<i64>, Vec<i64>) {
        let mut offsets = Vec::with_capacity(self.n + 1);
        let mut indices = Vec::with_capacity(2 * self.edges.len());
        offsets.push(0);
        for row in self.adjacency() {
            indices.extend(row.into_iter().map(|v| v as i64));
            offsets.push(indices.len() as i64);
        }
        (offsets, indices)
    }

    /// Dense rows of the strictly lower-triangular part (`L[i][j] = 1` for edges with `i > j`).
    pub fn lower_rows(&self) -> Vec<Vec<i64>> {
        let mut rows = vec![vec![0; self.n]; self.n];
        for &(u, v) in &self.edges {
            rows[v][u] = 1;
        }
        rows
    }

    /// Dense rows of the full adjacency matrix.
    pub fn adjacency_rows(&self) -> Vec<Vec<f64>> {
        let mut rows = vec![vec![0.0; self.n]; self.n];
        for &(u, v) in &self.edges {
            rows[u][v] = 1.0;
            rows[v][u] = 1.0;
        }
        rows
    }

    /// Applies a vertex permutation: node `v` becomes `perm[v]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Graph> {
        if perm.len() != self.n {
            return Err(Error::Argument(format!("permutation of {} for {} nodes", perm.len(), self.n)));
        }
        Graph::from_edges(self.n, self.edges.iter().map(|&(u, v)| (perm[u], perm[v])))
    }
}

pub fn complete(n: usize) -> Graph {
    let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
    Graph::from_edges(n, edges).expect("in range")
}

pub fn path(n: usize) -> Graph {
    Graph::from_edges(n, (1..n).map(|v| (v - 1, v))).expect("in range")
}

/// `n` nodes in total: center 0 joined to leaves `1..n`.
pub fn star(n: usize) -> Graph {
    Graph::from_edges(n, (1..n).map(|v| (0, v))).expect("in range")
}

/// Erdős–Rényi G(n, p).
pub fn gnp(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges).expect("in range")
}
