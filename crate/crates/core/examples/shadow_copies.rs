//! `C = B + A; A = D + A; print(A); print(C)`: releasing the old `A` while a
//! buffered add still reads it must not lose its value, under any flag set.

use lazyarr::{ArrayData, ArrayServer, BinOp, Client, ClientConfig, ServerConfig};

fn program(config: ClientConfig) -> lazyarr::Result<(ArrayData, ArrayData)> {
    let server = ArrayServer::new(ServerConfig::default());
    let mut c = Client::local(&server, config)?;
    let a = c.randint(0, 100, 6, 11)?;
    let b = c.randint(0, 100, 6, 12)?;
    let d = c.randint(0, 100, 6, 13)?;
    let cc = c.binop(BinOp::Add, &b, &a)?;
    let a2 = c.binop(BinOp::Add, &d, &a)?;
    c.release(a)?;
    let out = (c.to_values(&a2)?, c.to_values(&cc)?);
    for h in [a2, b, d, cc] {
        c.release(h)?;
    }
    Ok(out)
}

fn main() -> lazyarr::Result<()> {
    let want = program(ClientConfig::baseline())?;
    println!("A = {:?}\nC = {:?}", want.0, want.1);
    let agree = (0..64u8)
        .map(|bits| program(ClientConfig::from_bits(bits)))
        .collect::<lazyarr::Result<Vec<_>>>()?
        .iter()
        .filter(|got| **got == want)
        .count();
    println!("{agree} of 64 flag sets print the same values");
    Ok(())
}
