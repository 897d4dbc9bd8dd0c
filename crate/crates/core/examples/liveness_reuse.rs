//! `C = B + A; A = C + A`: the second add overwrites the array that held
//! the old `A`, because nothing reads it afterwards.

use lazyarr::{ArrayServer, BinOp, Client, ClientConfig, ServerConfig};

fn main() -> lazyarr::Result<()> {
    let server = ArrayServer::new(ServerConfig::default());
    let mut c = Client::local(&server, ClientConfig::optimized())?;
    c.enable_trace();

    let a = c.randint(0, 10, 10, 1)?;
    let b = c.randint(0, 10, 10, 2)?;
    let old_c = c.randint(0, 10, 10, 3)?;
    let new_c = c.binop(BinOp::Add, &b, &a)?;
    c.release(old_c)?;
    let new_a = c.binop(BinOp::Add, &new_c, &a)?;
    c.release(a)?;
    println!("{} commands buffered", c.pending_commands());

    let sid = c.materialize(&new_a)?;
    println!("A now lives in {sid}");
    for cmd in c.trace() {
        println!("  {}", serde_json::to_string(cmd).expect("commands serialize"));
    }
    println!("server arrays created: {}", c.metrics().arrays_created);
    for h in [new_a, b, new_c] {
        c.release(h)?;
    }
    Ok(())
}
