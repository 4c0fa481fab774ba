//! Line-delimited JSON protocol for driving an [`Environment`] in another
//! process.
//!
//! Each request is one line; each gets exactly one response line with the
//! same id. Ids must strictly increase on a connection. A connection owns its
//! own SUT session, created by the server's factory when it is accepted.

pub mod wire;

use std::io::{self, BufRead, BufReader, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use thiserror::Error;

use crate::environment::{notes, Command, Environment, Observation};
use crate::wom::WorldModel;
use wire::{Request, Response, PROTOCOL_VERSION};

pub const DEFAULT_PORT: u16 = 7878;
pub const PORT_ENV: &str = "XRTA_PORT";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_millis(5000);

#[derive(Debug, Error)]
pub enum RemoteError {
    #[error("cannot bind {addr}: {source}")]
    BindFailure { addr: String, source: io::Error },
    #[error("cannot connect to {addr}: {source}")]
    ConnectFailure { addr: String, source: io::Error },
}

type SessionFactory = dyn Fn() -> Box<dyn Environment> + Send + Sync;

/// Per-connection protocol state.
pub struct Session {
    env: Box<dyn Environment>,
    last_id: Option<u64>,
}

impl Session {
    pub fn new(env: Box<dyn Environment>) -> Self {
        Self { env, last_id: None }
    }

    /// Handles one request line and produces the response to send back.
    pub fn handle_line(&mut self, line: &str) -> Response {
        let request: Request = match wire::decode(line) {
            Ok(r) => r,
            Err(_) => {
                let id = serde_json::from_str::<serde_json::Value>(line)
                    .ok()
                    .and_then(|v| v.get("id").and_then(serde_json::Value::as_u64))
                    .unwrap_or(0);
                return Response::error(id, wire::notes::PARSE_ERROR);
            }
        };
        if request.v != PROTOCOL_VERSION {
            return Response::error(request.id, wire::notes::UNSUPPORTED_VERSION);
        }
        if self.last_id.is_some_and(|last| request.id <= last) {
            return Response::error(request.id, wire::notes::ID_ORDER);
        }
        self.last_id = Some(request.id);
        match request.to_command() {
            Ok(command) => Response::from_observation(request.id, self.env.execute(&command)),
            Err(wire::WireError::UnknownCommand(_)) => {
                Response::error(request.id, wire::notes::UNKNOWN_COMMAND)
            }
            Err(wire::WireError::MissingArgument(_)) => {
                Response::error(request.id, wire::notes::PARSE_ERROR)
            }
        }
    }
}

fn serve_connection(stream: TcpStream, env: Box<dyn Environment>) -> io::Result<()> {
    let mut writer = stream.try_clone()?;
    let reader = BufReader::new(stream);
    let mut session = Session::new(env);
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let response = session.handle_line(&line);
        writer.write_all(wire::encode(&response).as_bytes())?;
        writer.flush()?;
    }
    Ok(())
}

pub struct Server {
    listener: TcpListener,
    factory: Arc<SessionFactory>,
}

impl Server {
    pub fn bind(
        addr: impl ToSocketAddrs + std::fmt::Display,
        factory: impl Fn() -> Box<dyn Environment> + Send + Sync + 'static,
    ) -> Result<Self, RemoteError> {
        let listener = TcpListener::bind(&addr).map_err(|source| RemoteError::BindFailure {
            addr: addr.to_string(),
            source,
        })?;
        Ok(Self {
            listener,
            factory: Arc::new(factory),
        })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Accepts connections until the process ends, one thread each.
    pub fn serve(self) -> io::Result<()> {
        self.accept_loop(&AtomicBool::new(false), &Mutex::new(Vec::new()))
    }

    fn accept_loop(&self, stop: &AtomicBool, open: &Mutex<Vec<TcpStream>>) -> io::Result<()> {
        for stream in self.listener.incoming() {
            if stop.load(Ordering::SeqCst) {
                break;
            }
            let stream = match stream {
                Ok(s) => s,
                Err(_) => continue,
            };
            if let Ok(clone) = stream.try_clone() {
                open.lock().unwrap().push(clone);
            }
            let env = (self.factory)();
            thread::spawn(move || {
                // A dropped connection just ends its session.
                let _ = serve_connection(stream, env);
            });
        }
        Ok(())
    }

    /// Serves on a background thread.
    pub fn spawn(self) -> io::Result<ServerHandle> {
        let addr = self.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let open = Arc::new(Mutex::new(Vec::new()));
        let (s, o) = (Arc::clone(&stop), Arc::clone(&open));
        let thread = thread::spawn(move || {
            let _ = self.accept_loop(&s, &o);
        });
        Ok(ServerHandle {
            addr,
            stop,
            open,
            thread: Some(thread),
        })
    }
}

pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    open: Arc<Mutex<Vec<TcpStream>>>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops accepting and drops every open connection.
    pub fn shutdown(mut self) {
        self.stop_now();
    }

    fn stop_now(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        for s in self.open.lock().unwrap().drain(..) {
            let _ = s.shutdown(Shutdown::Both);
        }
        // Wake the accept loop.
        let _ = TcpStream::connect(self.addr);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        if self.thread.is_some() {
            self.stop_now();
        }
    }
}

/// Client-side environment. One request in flight at a time. Lost sessions,
/// timeouts and protocol errors show up as failed observations, after which
/// the connection is unusable.
pub struct RemoteEnvironment {
    conn: Option<(BufReader<TcpStream>, TcpStream)>,
    next_id: u64,
}

impl RemoteEnvironment {
    pub fn connect(addr: &str, timeout: Duration) -> Result<Self, RemoteError> {
        let fail = |source| RemoteError::ConnectFailure {
            addr: addr.to_owned(),
            source,
        };
        let target = addr
            .to_socket_addrs()
            .map_err(fail)?
            .next()
            .ok_or_else(|| fail(io::Error::new(io::ErrorKind::NotFound, "no address")))?;
        let stream = TcpStream::connect_timeout(&target, timeout).map_err(fail)?;
        stream.set_read_timeout(Some(timeout)).map_err(fail)?;
        stream.set_nodelay(true).map_err(fail)?;
        let writer = stream.try_clone().map_err(fail)?;
        Ok(Self {
            conn: Some((BufReader::new(stream), writer)),
            next_id: 1,
        })
    }

    pub fn is_closed(&self) -> bool {
        self.conn.is_none()
    }

    fn lost(&mut self, note: &str) -> Observation {
        if let Some((_, w)) = self.conn.take() {
            let _ = w.shutdown(Shutdown::Both);
        }
        Observation::failed(WorldModel::default(), note)
    }
}

/// Connects with the default timeout.
pub fn connect_environment(endpoint: &str) -> Result<RemoteEnvironment, RemoteError> {
    RemoteEnvironment::connect(endpoint, DEFAULT_TIMEOUT)
}

impl Environment for RemoteEnvironment {
    fn execute(&mut self, command: &Command) -> Observation {
        let id = self.next_id;
        let Some((reader, writer)) = self.conn.as_mut() else {
            return Observation::failed(WorldModel::default(), notes::SESSION_CLOSED);
        };
        self.next_id += 1;
        let line = wire::encode(&Request::from_command(id, command));
        if writer
            .write_all(line.as_bytes())
            .and_then(|_| writer.flush())
            .is_err()
        {
            return self.lost(notes::SESSION_CLOSED);
        }
        let mut reply = String::new();
        match reader.read_line(&mut reply) {
            Ok(0) => self.lost(notes::SESSION_CLOSED),
            Ok(_) => match wire::decode::<Response>(&reply) {
                Ok(resp) if resp.id == id => resp.into_observation(),
                _ => self.lost(notes::PROTOCOL_ERROR),
            },
            Err(e)
                if matches!(
                    e.kind(),
                    io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut
                ) =>
            {
                self.lost(notes::TIMEOUT)
            }
            Err(_) => self.lost(notes::SESSION_CLOSED),
        }
    }
}
