//! TCP front end: one thread per connection, framed request-reply.

use std::io::{BufReader, BufWriter, ErrorKind};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::Duration;

use super::{ArrayServer, ServerConfig, Session};
use crate::error::Result;
use crate::protocol::{read_frame, write_frame};

const ACCEPT_POLL: Duration = Duration::from_millis(10);

fn serve_connection(stream: TcpStream, mut session: Session) -> Result<()> {
    stream.set_nodelay(true)?;
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut writer = BufWriter::new(stream);
    while let Some(body) = read_frame(&mut reader)? {
        let reply = session.handle_bytes(&body);
        write_frame(&mut writer, &reply)?;
    }
    Ok(())
}

/// Accepts connections until the server is asked to shut down.
pub fn serve(listener: TcpListener, server: Arc<ArrayServer>) -> Result<()> {
    listener.set_nonblocking(true)?;
    while !server.is_shutdown() {
        match listener.accept() {
            Ok((stream, peer)) => {
                stream.set_nonblocking(false)?;
                log::info!("connection from {peer}");
                let session = server.session();
                thread::spawn(move || {
                    if let Err(e) = serve_connection(stream, session) {
                        log::warn!("connection {peer} closed: {e}");
                    }
                });
            }
            Err(e) if e.kind() == ErrorKind::WouldBlock => thread::sleep(ACCEPT_POLL),
            Err(e) => return Err(e.into()),
        }
    }
    log::info!("server shut down");
    Ok(())
}

/// A server running on a background thread.
pub struct ServerHandle {
    addr: SocketAddr,
    server: Arc<ArrayServer>,
    thread: Option<JoinHandle<Result<()>>>,
}

impl ServerHandle {
    /// Binds `addr` (port 0 picks a free port) and serves on a new thread.
    pub fn spawn(addr: impl ToSocketAddrs, config: ServerConfig) -> Result<ServerHandle> {
        let listener = TcpListener::bind(addr)?;
        let addr = listener.local_addr()?;
        let server = ArrayServer::new(config);
        let shared = Arc::clone(&server);
        let thread = thread::spawn(move || serve(listener, shared));
        Ok(ServerHandle {
            addr,
            server,
            thread: Some(thread),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn server(&self) -> &Arc<ArrayServer> {
        &self.server
    }

    /// Stops accepting connections and waits for the accept loop to exit.
    pub fn shutdown(mut self) -> Result<()> {
        self.server.request_shutdown();
        self.join()
    }

    fn join(&mut self) -> Result<()> {
        match self.thread.take() {
            Some(t) => t.join().unwrap_or(Ok(())),
            None => Ok(()),
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.server.request_shutdown();
        let _ = self.join();
    }
}
