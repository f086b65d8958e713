//! TCP servers and the matching client.
//!
//! A server answers each connection on its own thread. Frames are read until
//! the peer closes; malformed frames get an Error frame and the connection
//! stays usable.

use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, RwLock};
use std::thread::{self, JoinHandle};
use std::time::Instant;

use crate::engine::{build_transcript, finish_run, prepare_run, server_answer, Database, RunOptions, Transcript};
use crate::error::{PltError, Result};
use crate::field::{Fe, PrimeField};
use crate::grs::Demand;
use crate::wire::{self, codes, Frame, MsgType};

pub const DEFAULT_PORT: u16 = 7311;

/// `PLT_BIND` if set, else loopback on the default port.
pub fn default_bind() -> String {
    std::env::var("PLT_BIND").unwrap_or_else(|_| format!("127.0.0.1:{DEFAULT_PORT}"))
}

type SharedDb = Arc<RwLock<Option<Arc<Database>>>>;

pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops accepting connections and waits for the accept loop to exit.
    pub fn shutdown(mut self) {
        self.stop_and_join();
    }

    /// Blocks until the accept loop exits (in practice, forever).
    pub fn wait(mut self) {
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }

    fn stop_and_join(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // wake the blocking accept
        let _ = TcpStream::connect(self.addr);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        if self.thread.is_some() {
            self.stop_and_join();
        }
    }
}

/// Starts a server; `db` may be `None` if a LoadDb frame will follow.
pub fn serve(db: Option<Database>, bind: &str) -> Result<ServerHandle> {
    let listener = TcpListener::bind(bind).map_err(|source| PltError::ConnectionFailed { endpoint: bind.to_string(), source })?;
    let addr = listener.local_addr()?;
    let stop = Arc::new(AtomicBool::new(false));
    let shared: SharedDb = Arc::new(RwLock::new(db.map(Arc::new)));
    let flag = stop.clone();
    let thread = thread::spawn(move || {
        for conn in listener.incoming() {
            if flag.load(Ordering::SeqCst) {
                break;
            }
            let Ok(stream) = conn else { continue };
            let db = shared.clone();
            thread::spawn(move || {
                let _ = handle_connection(stream, &db);
            });
        }
    });
    Ok(ServerHandle { addr, stop, thread: Some(thread) })
}

fn handle_connection(mut stream: TcpStream, db: &SharedDb) -> Result<()> {
    loop {
        let reply = match wire::read_frame(&mut stream) {
            Ok(None) => return Ok(()),
            Ok(Some(frame)) => respond(frame, db),
            Err(PltError::Io(e)) => return Err(e.into()),
            Err(e) => wire::encode_error(wire::error_code(&e), &e.to_string()),
        }?;
        wire::write_frame(&mut stream, &reply)?;
    }
}

fn respond(frame: Frame, db: &SharedDb) -> Result<Vec<u8>> {
    let result = match frame.msg_type {
        MsgType::Query => {
            let current = db.read().expect("database lock").clone();
            match current {
                None => return wire::encode_error(codes::NO_DATABASE, "no database loaded"),
                Some(d) => wire::parse_query_payload(&frame.payload)
                    .and_then(|b| server_answer(&d, &b))
                    .and_then(|a| wire::encode_answer(&a)),
            }
        }
        MsgType::LoadDb => wire::parse_db_payload(&frame.payload).and_then(|d| {
            *db.write().expect("database lock") = Some(Arc::new(d));
            wire::encode_answer(&[])
        }),
        other => return wire::encode_error(codes::UNEXPECTED, &format!("servers do not accept {other:?} frames")),
    };
    result.or_else(|e| wire::encode_error(wire::error_code(&e), &e.to_string()))
}

fn connect(endpoint: &str) -> Result<TcpStream> {
    TcpStream::connect(endpoint).map_err(|source| PltError::ConnectionFailed { endpoint: endpoint.to_string(), source })
}

/// Sends one frame and reads the single reply. Error replies become [`PltError::Remote`].
pub fn exchange(endpoint: &str, request: &[u8]) -> Result<Frame> {
    let mut s = connect(endpoint)?;
    let io = |source| PltError::ConnectionFailed { endpoint: endpoint.to_string(), source };
    wire::write_frame(&mut s, request).map_err(|e| match e {
        PltError::Io(source) => io(source),
        e => e,
    })?;
    let frame = match wire::read_frame(&mut s) {
        Ok(Some(f)) => f,
        Ok(None) => return Err(PltError::Malformed(format!("{endpoint} closed the connection without replying"))),
        Err(PltError::Io(source)) => return Err(io(source)),
        Err(e) => return Err(e),
    };
    if frame.msg_type == MsgType::Error {
        let (code, message) = wire::parse_error_payload(&frame.payload)?;
        return Err(PltError::Remote { code, message });
    }
    Ok(frame)
}

/// Pushes a database to a running server.
pub fn load_database(endpoint: &str, db: &Database) -> Result<()> {
    let reply = exchange(endpoint, &wire::encode_load_db(db)?)?;
    if reply.msg_type != MsgType::Answer {
        return Err(PltError::Malformed(format!("unexpected {:?} reply to LoadDb", reply.msg_type)));
    }
    Ok(())
}

/// A run where server `n` is the TCP endpoint `addresses[n]`. Each server is
/// sent only its own query; requests go out concurrently.
pub fn client_run(
    addresses: &[String],
    field: &PrimeField,
    k: usize,
    demand: &Demand,
    seed: u64,
    opts: &RunOptions,
) -> Result<(Transcript, Vec<Fe>)> {
    let start = Instant::now();
    let prep = prepare_run(field, k, addresses.len(), demand, seed, opts)?;
    let frames = prep.query_frames()?;
    let answers: Vec<Vec<Fe>> = thread::scope(|scope| {
        let handles: Vec<_> = addresses
            .iter()
            .zip(&frames)
            .map(|(addr, frame)| {
                scope.spawn(move || -> Result<Vec<Fe>> {
                    let reply = exchange(addr, frame)?;
                    if reply.msg_type != MsgType::Answer {
                        return Err(PltError::Malformed(format!("{addr} replied with {:?}", reply.msg_type)));
                    }
                    wire::parse_answer_payload(&reply.payload, field)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("client thread")).collect::<Result<Vec<_>>>()
    })?;
    let recovered = finish_run(&prep, &answers)?;
    let transcript = build_transcript(&prep, &answers, recovered.clone(), start.elapsed())?;
    Ok((transcript, recovered))
}
