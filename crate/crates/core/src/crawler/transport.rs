use socket2::{Domain, Protocol, SockAddr, Socket, Type};
use std::collections::{BTreeMap, HashMap};
use std::io::{ErrorKind, Read, Write};
use std::net::{IpAddr, SocketAddr, TcpStream, ToSocketAddrs};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use super::TransportOutcome;
use crate::engine::{CookiePolicy, EngineProfile, WireRequest};

/// Identity a request is sent from; censors and robot detectors key their state on it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SourceId(pub String);

impl SourceId {
    pub fn worker(index: u32) -> Self {
        SourceId(format!("worker-{index}"))
    }

    /// Worker index for ids made by [`SourceId::worker`].
    pub fn worker_index(&self) -> Option<u32> {
        self.0.strip_prefix("worker-")?.parse().ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exchange {
    pub outcome: TransportOutcome,
    /// Seconds from send to termination.
    pub elapsed: f64,
}

/// Sends one request and reports how it terminated.
pub trait Transport: Send + Sync {
    fn exchange(
        &self,
        source: &SourceId,
        profile: &EngineProfile,
        request: &WireRequest,
        at: f64,
    ) -> Exchange;

    /// Whether requests from different lanes may be in flight at the same time.
    fn concurrent(&self) -> bool {
        false
    }
}

/// Plain HTTP/1.1 over TCP, one connection per request.
///
/// Errors are kept at the socket level so that a reset by peer is
/// distinguishable from a timeout. HTTPS is not supported.
pub struct HttpTransport {
    pub timeout: Duration,
    /// Optional per-worker source addresses; worker `i` binds `source_addrs[i % len]`.
    pub source_addrs: Vec<IpAddr>,
    cookies: Mutex<HashMap<(SourceId, String), BTreeMap<String, String>>>,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Self {
        HttpTransport {
            timeout,
            source_addrs: Vec::new(),
            cookies: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_source_addrs(mut self, addrs: Vec<IpAddr>) -> Self {
        self.source_addrs = addrs;
        self
    }

    fn connect(&self, source: &SourceId, addr: SocketAddr) -> std::io::Result<TcpStream> {
        let socket = Socket::new(Domain::for_address(addr), Type::STREAM, Some(Protocol::TCP))?;
        if let (Some(idx), false) = (source.worker_index(), self.source_addrs.is_empty()) {
            let ip = self.source_addrs[idx as usize % self.source_addrs.len()];
            socket.bind(&SockAddr::from(SocketAddr::new(ip, 0)))?;
        }
        socket.connect_timeout(&SockAddr::from(addr), self.timeout)?;
        let stream: TcpStream = socket.into();
        stream.set_read_timeout(Some(self.timeout))?;
        stream.set_write_timeout(Some(self.timeout))?;
        Ok(stream)
    }

    fn send(
        &self,
        source: &SourceId,
        profile: &EngineProfile,
        request: &WireRequest,
    ) -> TransportOutcome {
        let url = match url::Url::parse(request.url_str()) {
            Ok(u) => u,
            Err(e) => return TransportOutcome::Unreachable(format!("bad url: {e}")),
        };
        if url.scheme() != "http" {
            return TransportOutcome::Unreachable(format!("unsupported scheme {}", url.scheme()));
        }
        let Some(host) = url.host_str() else {
            return TransportOutcome::Unreachable("url without host".into());
        };
        let port = url.port_or_known_default().unwrap_or(80);
        let addr = match (host, port)
            .to_socket_addrs()
            .ok()
            .and_then(|mut a| a.next())
        {
            Some(a) => a,
            None => return TransportOutcome::Unreachable(format!("cannot resolve {host}")),
        };
        let mut stream = match self.connect(source, addr) {
            Ok(s) => s,
            Err(e) => return io_outcome(e),
        };

        let target = match url.query() {
            Some(q) => format!("{}?{}", url.path(), q),
            None => url.path().to_owned(),
        };
        let mut head = format!(
            "{} {} HTTP/1.1\r\nHost: {}\r\nConnection: close\r\n",
            request.method, target, host
        );
        for (k, v) in &request.headers {
            head.push_str(&format!("{k}: {v}\r\n"));
        }
        let jar_key = (source.clone(), profile.id.0.clone());
        if profile.cookie_policy == CookiePolicy::Accept {
            if let Some(jar) = self
                .cookies
                .lock()
                .unwrap()
                .get(&jar_key)
                .filter(|j| !j.is_empty())
            {
                let cookie: Vec<String> = jar.iter().map(|(k, v)| format!("{k}={v}")).collect();
                head.push_str(&format!("Cookie: {}\r\n", cookie.join("; ")));
            }
        }
        head.push_str("\r\n");
        if let Err(e) = stream.write_all(head.as_bytes()) {
            return io_outcome(e);
        }

        let mut raw = Vec::new();
        if let Err(e) = stream.read_to_end(&mut raw) {
            return io_outcome(e);
        }
        let mut headers = [httparse::EMPTY_HEADER; 64];
        let mut response = httparse::Response::new(&mut headers);
        let body_start = match response.parse(&raw) {
            Ok(httparse::Status::Complete(n)) => n,
            // A connection that dies before a full head arrives looks like a reset.
            _ => return TransportOutcome::ResetByPeer,
        };
        let status = response.code.unwrap_or(0);
        let mut content_length = None;
        for h in response.headers.iter() {
            if h.name.eq_ignore_ascii_case("content-length") {
                content_length = std::str::from_utf8(h.value)
                    .ok()
                    .and_then(|v| v.trim().parse::<usize>().ok());
            } else if h.name.eq_ignore_ascii_case("set-cookie")
                && profile.cookie_policy == CookiePolicy::Accept
            {
                if let Some((k, v)) = std::str::from_utf8(h.value)
                    .ok()
                    .and_then(|v| v.split(';').next())
                    .and_then(|kv| kv.split_once('='))
                {
                    self.cookies
                        .lock()
                        .unwrap()
                        .entry(jar_key.clone())
                        .or_default()
                        .insert(k.trim().to_owned(), v.trim().to_owned());
                }
            }
        }
        let mut body = raw[body_start..].to_vec();
        if let Some(len) = content_length {
            if body.len() < len {
                return TransportOutcome::ResetByPeer;
            }
            body.truncate(len);
        }
        TransportOutcome::Response { status, body }
    }
}

fn io_outcome(e: std::io::Error) -> TransportOutcome {
    match e.kind() {
        ErrorKind::ConnectionReset | ErrorKind::ConnectionAborted | ErrorKind::BrokenPipe => {
            TransportOutcome::ResetByPeer
        }
        ErrorKind::TimedOut | ErrorKind::WouldBlock => TransportOutcome::TimedOut,
        _ => TransportOutcome::Unreachable(e.to_string()),
    }
}

impl Transport for HttpTransport {
    fn exchange(
        &self,
        source: &SourceId,
        profile: &EngineProfile,
        request: &WireRequest,
        _at: f64,
    ) -> Exchange {
        let start = Instant::now();
        let outcome = self.send(source, profile, request);
        Exchange {
            outcome,
            elapsed: start.elapsed().as_secs_f64(),
        }
    }

    fn concurrent(&self) -> bool {
        true
    }
}
