//! Dense and sparse triangle counting on a generator spec or a Matrix Market file.
//!
//! `cargo run --example triangle_count -- gnp:64:0.1:3`

use lazyarr::bench::{run_benchmark, BenchOptions, Benchmark};
use lazyarr::{ArrayServer, Client, ClientConfig, ServerConfig};

fn main() -> lazyarr::Result<()> {
    let input = std::env::args().nth(1).unwrap_or_else(|| "gnp:64:0.1:3".into());
    for bench in [Benchmark::TcDense, Benchmark::TcSparse] {
        for config in [ClientConfig::baseline(), ClientConfig::optimized()] {
            let server = ArrayServer::new(ServerConfig::default());
            let mut c = Client::local(&server, config)?;
            let r = run_benchmark(&mut c, bench, &input, &BenchOptions::default())?;
            println!(
                "{bench:<9} {:<4} triangles={} verified={:?} messages={} arrays={}",
                r.mode, r.result, r.verified, r.messages_sent, r.arrays_created
            );
        }
    }
    Ok(())
}
