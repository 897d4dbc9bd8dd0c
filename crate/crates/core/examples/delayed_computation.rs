//! Values that are never observed are never computed: `C = B + A` is dropped,
//! along with the creations only it needed.

use lazyarr::{ArrayServer, BinOp, Client, ClientConfig, ServerConfig};

fn main() -> lazyarr::Result<()> {
    for config in [ClientConfig::baseline(), ClientConfig::optimized()] {
        let server = ArrayServer::new(ServerConfig::default());
        let mut c = Client::local(&server, config)?;
        let a = c.randint(0, 10, 10, 1)?;
        let b = c.randint(0, 10, 10, 2)?;
        let e = c.randint(0, 10, 10, 3)?;
        let f = c.randint(0, 10, 10, 4)?;
        let unused = c.binop(BinOp::Add, &b, &a)?;
        let d = c.binop(BinOp::Add, &e, &f)?;
        let values = c.to_values(&d)?;
        let m = c.metrics();
        println!(
            "[{}] D = {values:?}: {} messages, {} arrays",
            config.label(),
            m.messages_sent,
            m.arrays_created
        );
        for h in [a, b, e, f, unused, d] {
            c.release(h)?;
        }
    }
    Ok(())
}
