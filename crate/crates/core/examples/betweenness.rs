//! Single-source betweenness dependencies computed on the server, checked
//! against a host-side Brandes pass.

use lazyarr::bench::{bc_single_source, graph, oracle_bc, DenseMatrix};
use lazyarr::{ArrayServer, Client, ClientConfig, ServerConfig};

fn main() -> lazyarr::Result<()> {
    let g = graph::gnp(16, 0.25, 5);
    let source = 0;
    let server = ArrayServer::new(ServerConfig::default());
    let mut c = Client::local(&server, ClientConfig::optimized())?;
    let a = DenseMatrix::adjacency(&mut c, &g)?;
    let got = bc_single_source(&mut c, &a, source)?;
    a.release(&mut c)?;
    let want = oracle_bc(&g, source)?;

    println!("vertex  paths  delta    oracle");
    for v in 0..g.n() {
        println!("{v:>6}  {:>5}  {:>7.4}  {:>7.4}", got.paths[v], got.delta[v], want.delta[v]);
    }
    println!("{} messages, {} server arrays", c.metrics().messages_sent, c.metrics().arrays_created);
    Ok(())
}
