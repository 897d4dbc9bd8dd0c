//! The taxi statistics chain: repeated and overlapping reductions are served
//! from the client's memo.

use lazyarr::bench::{run_benchmark, BenchOptions, Benchmark};
use lazyarr::{ArrayServer, Client, ClientConfig, ServerConfig};

fn main() -> lazyarr::Result<()> {
    let input = std::env::args().nth(1).unwrap_or_else(|| "rand:1000:0:100:7".into());
    for config in [ClientConfig::baseline(), ClientConfig::optimized()] {
        let server = ArrayServer::new(ServerConfig::default());
        let mut c = Client::local(&server, config)?;
        let r = run_benchmark(&mut c, Benchmark::Taxi, &input, &BenchOptions::default())?;
        let m = c.metrics();
        println!(
            "[{}] {} -> {} messages, {} reductions sent, {} memo hits, verified {:?}",
            r.mode, r.result, r.messages_sent, m.reduces_sent, m.cache_hits_reduce, r.verified
        );
    }
    Ok(())
}
