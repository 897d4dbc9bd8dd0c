use std::io::{BufReader, BufWriter, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::protocol::read_frame;
use crate::server::{ArrayServer, Session};

/// Moves one encoded request frame to the server and returns the reply body.
pub trait Transport: Send {
    fn round_trip(&mut self, frame: &[u8]) -> Result<Vec<u8>>;
}

pub struct TcpTransport {
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
}

impl TcpTransport {
    pub fn connect(addr: impl ToSocketAddrs) -> Result<TcpTransport> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(TcpTransport {
            reader: BufReader::new(stream.try_clone()?),
            writer: BufWriter::new(stream),
        })
    }
}

impl Transport for TcpTransport {
    fn round_trip(&mut self, frame: &[u8]) -> Result<Vec<u8>> {
        self.writer.write_all(frame)?;
        self.writer.flush()?;
        read_frame(&mut self.reader)?
            .ok_or_else(|| Error::Protocol("server closed the connection".into()))
    }
}

/// Talks to an in-process server through the same framing as TCP.
pub struct LocalTransport {
    session: Session,
}

impl LocalTransport {
    pub fn new(server: &Arc<ArrayServer>) -> LocalTransport {
        LocalTransport {
            session: server.session(),
        }
    }
}

impl Transport for LocalTransport {
    fn round_trip(&mut self, frame: &[u8]) -> Result<Vec<u8>> {
        let mut cursor = frame;
        let body = read_frame(&mut cursor)?
            .ok_or_else(|| Error::Frame("empty request frame".into()))?;
        if !cursor.is_empty() {
            return Err(Error::Frame("trailing bytes after request frame".into()));
        }
        Ok(self.session.handle_bytes(&body))
    }
}
