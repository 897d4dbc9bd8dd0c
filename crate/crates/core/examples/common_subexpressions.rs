//! `B = A*A; C = A*A; D = B + C` multiplies once; `B` and `C` share a server array.

use lazyarr::{ArrayServer, BinOp, Client, ClientConfig, ServerConfig};

fn main() -> lazyarr::Result<()> {
    let server = ArrayServer::new(ServerConfig::default());
    let mut c = Client::local(&server, ClientConfig::optimized())?;
    c.enable_trace();
    let a = c.randint(0, 10, 10, 1)?;
    let b = c.binop(BinOp::Mul, &a, &a)?;
    let cc = c.binop(BinOp::Mul, &a, &a)?;
    let d = c.binop(BinOp::Add, &b, &cc)?;
    println!("D = {:?}", c.to_values(&d)?);
    println!("B in {:?}, C in {:?}", c.server_id(&b), c.server_id(&cc));
    println!("expression cache hits: {}", c.metrics().cache_hits_expr);
    for cmd in c.trace() {
        println!("  {}", cmd.name());
    }
    for h in [a, b, cc, d] {
        c.release(h)?;
    }
    Ok(())
}
