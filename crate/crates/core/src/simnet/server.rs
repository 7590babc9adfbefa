use socket2::SockRef;
use std::io::{self, ErrorKind, Read, Write};
use std::net::{IpAddr, Ipv4Addr, SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use super::scenario::{NetOutcome, SimNetwork};
use crate::crawler::{Clock, SourceId, SystemClock};
use crate::engine::{EngineId, EngineProfile};

/// Serves every engine of a [`SimNetwork`] over loopback HTTP/1.1, one
/// listener per engine. Middlebox resets close the connection with an RST.
pub struct SimServer {
    addrs: Vec<(EngineId, SocketAddr)>,
    stop: Arc<AtomicBool>,
    handles: Vec<JoinHandle<()>>,
}

impl SimServer {
    /// Binds engine `i` to `127.0.0.1:port_base + i`; port base 0 picks ephemeral ports.
    pub fn start(net: Arc<SimNetwork>, port_base: u16) -> io::Result<Self> {
        let clock = Arc::new(SystemClock::starting_at(0.0));
        let stop = Arc::new(AtomicBool::new(false));
        let mut addrs = Vec::new();
        let mut handles = Vec::new();
        for (i, engine) in net.engines.iter().enumerate() {
            let port = if port_base == 0 {
                0
            } else {
                port_base + i as u16
            };
            let listener =
                TcpListener::bind(SocketAddr::new(IpAddr::V4(Ipv4Addr::LOCALHOST), port))?;
            listener.set_nonblocking(true)?;
            addrs.push((engine.id.clone(), listener.local_addr()?));
            let (net, clock, stop, id) = (
                Arc::clone(&net),
                Arc::clone(&clock),
                Arc::clone(&stop),
                engine.id.clone(),
            );
            handles.push(std::thread::spawn(move || {
                accept_loop(listener, net, clock, stop, id)
            }));
        }
        Ok(SimServer {
            addrs,
            stop,
            handles,
        })
    }

    pub fn addrs(&self) -> &[(EngineId, SocketAddr)] {
        &self.addrs
    }

    pub fn base_url(&self, id: &EngineId) -> Option<String> {
        self.addrs
            .iter()
            .find(|(e, _)| e == id)
            .map(|(_, a)| format!("http://{a}"))
    }

    /// Crawler profiles pointing at this server.
    pub fn client_profiles(&self, net: &SimNetwork) -> Vec<EngineProfile> {
        self.addrs
            .iter()
            .filter_map(|(id, a)| net.client_profile(id, &format!("http://{a}")))
            .collect()
    }

    /// Blocks until [`SimServer::shutdown`] is called from another handle or the process exits.
    pub fn wait(self) {
        for h in self.handles {
            let _ = h.join();
        }
    }

    pub fn shutdown(self) {
        self.stop.store(true, Ordering::SeqCst);
        self.wait();
    }
}

fn accept_loop(
    listener: TcpListener,
    net: Arc<SimNetwork>,
    clock: Arc<SystemClock>,
    stop: Arc<AtomicBool>,
    id: EngineId,
) {
    while !stop.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, peer)) => {
                let (net, clock, id) = (Arc::clone(&net), Arc::clone(&clock), id.clone());
                std::thread::spawn(move || {
                    if let Err(e) = handle_connection(stream, peer, &net, clock.as_ref(), &id) {
                        log::debug!("sim connection from {peer}: {e}");
                    }
                });
            }
            Err(e) if e.kind() == ErrorKind::WouldBlock => {
                std::thread::sleep(Duration::from_millis(2))
            }
            Err(e) => {
                log::warn!("sim listener for {id}: {e}");
                std::thread::sleep(Duration::from_millis(50));
            }
        }
    }
}

fn read_head(stream: &mut TcpStream) -> io::Result<Vec<u8>> {
    let mut buf = Vec::new();
    let mut chunk = [0u8; 4096];
    while !buf.windows(4).any(|w| w == b"\r\n\r\n") {
        if buf.len() > 64 * 1024 {
            return Err(io::Error::new(
                ErrorKind::InvalidData,
                "request head too large",
            ));
        }
        let n = stream.read(&mut chunk)?;
        if n == 0 {
            return Err(io::Error::new(
                ErrorKind::UnexpectedEof,
                "connection closed before request head",
            ));
        }
        buf.extend_from_slice(&chunk[..n]);
    }
    Ok(buf)
}

fn reason(status: u16) -> &'static str {
    match status {
        200 => "OK",
        400 => "Bad Request",
        503 => "Service Unavailable",
        999 => "Request Denied",
        _ => "Unknown",
    }
}

fn handle_connection(
    mut stream: TcpStream,
    peer: SocketAddr,
    net: &SimNetwork,
    clock: &dyn Clock,
    id: &EngineId,
) -> io::Result<()> {
    stream.set_nonblocking(false)?;
    stream.set_read_timeout(Some(Duration::from_secs(10)))?;
    let head = read_head(&mut stream)?;
    let mut headers = [httparse::EMPTY_HEADER; 64];
    let mut req = httparse::Request::new(&mut headers);
    let target = match req.parse(&head) {
        Ok(httparse::Status::Complete(_)) if req.method == Some("GET") => {
            req.path.unwrap_or("").to_owned()
        }
        _ => String::new(),
    };
    let source = SourceId(peer.ip().to_string());
    let (status, content_type, body) = match net.handle(&source, id, target.as_bytes(), clock.now())
    {
        Some(NetOutcome::Reset) => {
            SockRef::from(&stream).set_linger(Some(Duration::ZERO))?;
            drop(stream);
            return Ok(());
        }
        Some(NetOutcome::Response(r)) => (r.status, r.content_type, r.body),
        None => (400, "text/plain".to_owned(), b"unknown engine".to_vec()),
    };
    let head = format!(
        "HTTP/1.1 {status} {}\r\nContent-Type: {content_type}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        reason(status),
        body.len()
    );
    stream.write_all(head.as_bytes())?;
    stream.write_all(&body)?;
    stream.flush()?;
    let _ = stream.shutdown(std::net::Shutdown::Write);
    Ok(())
}
