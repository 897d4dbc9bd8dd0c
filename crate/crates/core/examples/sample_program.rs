//! The sample program `A = randint; B = (A*A)+(A*A); C = randint; print(B)`
//! under the baseline and optimized clients, with the commands each one sends.

use lazyarr::{ArrayServer, BinOp, Client, ClientConfig, ServerConfig};

fn main() -> lazyarr::Result<()> {
    for config in [ClientConfig::baseline(), ClientConfig::optimized()] {
        let server = ArrayServer::new(ServerConfig::default());
        let mut c = Client::local(&server, config)?;
        c.enable_trace();

        let a = c.randint(0, 10, 10, 1)?;
        let t1 = c.binop(BinOp::Mul, &a, &a)?;
        let t2 = c.binop(BinOp::Mul, &a, &a)?;
        let b = c.binop(BinOp::Add, &t1, &t2)?;
        c.release(t1)?;
        c.release(t2)?;
        let cc = c.randint(0, 10, 10, 2)?;
        println!("[{}] B = {:?}", config.label(), c.to_values(&b)?);

        let m = c.metrics();
        for cmd in c.trace() {
            println!("    {}", serde_json::to_string(cmd).expect("commands serialize"));
        }
        println!("    {} messages, {} server arrays", m.messages_sent, m.arrays_created);
        for h in [a, b, cc] {
            c.release(h)?;
        }
    }
    Ok(())
}
