//! Paired base/opt runs tabulated with their cost breakdown and ratios.

use lazyarr::bench::{run_benchmark, BenchOptions, Benchmark};
use lazyarr::report::render_table;
use lazyarr::{ArrayServer, Client, ClientConfig, ServerConfig};

fn main() -> lazyarr::Result<()> {
    let runs = [
        (Benchmark::TcDense, "kn:16"),
        (Benchmark::TcSparse, "gnp:64:0.1:3"),
        (Benchmark::Bc, "gnp:32:0.2:1"),
        (Benchmark::Taxi, "rand:100000:0:100:7"),
    ];
    let mut reports = Vec::new();
    for (bench, input) in runs {
        for config in [ClientConfig::baseline(), ClientConfig::optimized()] {
            let server = ArrayServer::new(ServerConfig::default());
            let mut c = Client::local(&server, config)?;
            reports.push(run_benchmark(&mut c, bench, input, &BenchOptions::default())?);
        }
    }
    print!("{}", render_table(&reports));
    Ok(())
}
