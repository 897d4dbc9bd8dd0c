//! Feeds a script to the interpreter, as `lazyarr repl` does with stdin.

use std::io::{self, Cursor};

use lazyarr::repl::Repl;
use lazyarr::{ArrayServer, Client, ClientConfig, ServerConfig};

const SCRIPT: &str = "\
import arkouda as ak
A = ak.randint(0, 10, 10)
B = (A * A) + (A * A)
C = ak.randint(0, 10, 10)
print(B)
print(Q)
print(ak.sum(B))
print(mean(B))
stats
";

fn main() -> lazyarr::Result<()> {
    let server = ArrayServer::new(ServerConfig::default());
    let client = Client::local(&server, ClientConfig::optimized())?;
    let mut repl = Repl::new(client, 0);
    repl.run(Cursor::new(SCRIPT), io::stdout().lock(), false)?;
    repl.close()?;
    Ok(())
}
