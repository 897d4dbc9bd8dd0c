//! What a request and its reply look like on the wire.

use lazyarr::protocol::{encode_frame, Command, OperandRef, Request, ServerId};
use lazyarr::{ArrayServer, BinOp, Scalar, ServerConfig};

fn main() -> lazyarr::Result<()> {
    let server = ArrayServer::new(ServerConfig::default());
    let mut session = server.session();
    let requests = [
        Command::Create { dtype: lazyarr::Dtype::Int64, size: 4, fill: lazyarr::protocol::FillSpec::Arange },
        Command::Binop {
            op: BinOp::Mul,
            left: OperandRef::Array(ServerId::from_counter(1)),
            right: OperandRef::Scalar(Scalar::Float(0.5)),
        },
        Command::Fetch { a: ServerId::from_counter(2), start: None, stop: None },
        Command::Delete { a: ServerId::from_counter(9) },
    ];
    for (tag, command) in requests.into_iter().enumerate() {
        let frame = encode_frame(&Request { tag: tag as u64 + 1, command })?;
        println!("-> {:02x?} {}", &frame[..4], String::from_utf8_lossy(&frame[4..]));
        let reply = session.handle_bytes(&frame[4..]);
        println!("<- {}", String::from_utf8_lossy(&reply));
    }
    Ok(())
}
