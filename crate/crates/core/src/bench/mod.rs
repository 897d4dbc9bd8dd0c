//! Graph benchmarks run through the client, with inputs and reference oracles.

mod algo;
pub mod graph;
mod mtx;
mod oracle;
mod runner;

pub use algo::{
    bc_single_source, taxi_chain, tc_dense, tc_sparse, DenseMatrix, SparseGraph, SPARSE_TC_OVERCOUNT,
};
pub use graph::Graph;
pub use mtx::{load_matrix_market, parse_matrix_market};
pub use oracle::{oracle_bc, oracle_triangles, BcResult, ORACLE_MAX_NODES};
pub use runner::{
    results_match, run_benchmark, BenchOptions, BenchReport, Benchmark, CostBreakdown, InputSpec,
    DENSE_LIMIT, SPARSE_LIMIT,
};
