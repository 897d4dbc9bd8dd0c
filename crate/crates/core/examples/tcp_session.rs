//! A server on a loopback port, two concurrent clients and a remote shutdown.

use std::thread;

use lazyarr::server::{ServerConfig, ServerHandle};
use lazyarr::{BinOp, Client, ClientConfig};

fn main() -> lazyarr::Result<()> {
    let handle = ServerHandle::spawn("127.0.0.1:0", ServerConfig::default())?;
    let addr = handle.addr();
    println!("listening on {addr}");

    let workers: Vec<_> = (1..=2i64)
        .map(|k| {
            thread::spawn(move || -> lazyarr::Result<String> {
                let mut c = Client::connect(addr, ClientConfig::optimized())?;
                let a = c.arange(10)?;
                let b = c.binop(BinOp::Mul, &a, k)?;
                let total = c.sum(&b)?;
                c.release(a)?;
                c.release(b)?;
                c.drain_cache()?;
                Ok(format!("session {}: sum = {total:?}", c.session_id()))
            })
        })
        .collect();
    for w in workers {
        println!("{}", w.join().expect("worker panicked")?);
    }

    let mut c = Client::connect(addr, ClientConfig::baseline())?;
    println!("{}", c.client_metrics()?.to_json());
    c.shutdown_server()?;
    handle.shutdown()?;
    println!("server stopped");
    Ok(())
}
