use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use tungstenite::{Message, WebSocket};

use crate::protocol::encode_server;
use crate::session::{Driver, SessionDefaults};
use crate::SteerError;

#[derive(Debug, Clone)]
pub struct ServerOptions {
    pub defaults: SessionDefaults,
    /// Transcript file; connection `n > 1` writes `<path>.<n>`.
    pub record: Option<PathBuf>,
    /// Stop after this many connections have closed; `None` serves forever.
    pub max_connections: Option<usize>,
}

/// Accepts websocket connections on `listener`, one session each, every
/// connection on its own thread.
pub fn serve(listener: TcpListener, options: ServerOptions) -> Result<(), SteerError> {
    let counter = Arc::new(AtomicU64::new(0));
    let mut handles = Vec::new();
    for stream in listener.incoming() {
        let stream = stream?;
        let id = counter.fetch_add(1, Ordering::SeqCst) + 1;
        let conn_options = options.clone();
        handles.push(thread::spawn(move || {
            if let Err(e) = run_connection(stream, id, &conn_options) {
                log::warn!("connection {id}: {e}");
            }
        }));
        if options.max_connections.is_some_and(|m| handles.len() >= m) {
            break;
        }
    }
    for h in handles {
        let _ = h.join();
    }
    Ok(())
}

fn run_connection(stream: TcpStream, id: u64, options: &ServerOptions) -> Result<(), SteerError> {
    let peer = stream.peer_addr().ok();
    let mut ws = tungstenite::accept(stream).map_err(|e| SteerError::Protocol(format!("handshake: {e}")))?;
    log::info!("connection {id} from {peer:?}");
    let mut driver = Driver::new(options.defaults.clone(), None);
    let result = pump(&mut ws, &mut driver);
    if let Some(path) = &options.record {
        let path = if id == 1 {
            path.clone()
        } else {
            PathBuf::from(format!("{}.{id}", path.display()))
        };
        std::fs::write(&path, serde_json::to_string_pretty(driver.transcript())?)?;
        log::info!("transcript written to {}", path.display());
    }
    result
}

fn pump(ws: &mut WebSocket<TcpStream>, driver: &mut Driver) -> Result<(), SteerError> {
    let mut next = Instant::now() + driver.period();
    loop {
        let now = Instant::now();
        if now >= next {
            let budget = driver.period();
            driver.set_budget(Some(budget));
            for msg in driver.boundary() {
                ws.send(Message::Text(encode_server(&msg)))?;
            }
            next += budget;
            // A slow tick does not make the ticker race to catch up.
            if next < Instant::now() {
                next = Instant::now() + budget;
            }
            continue;
        }
        let wait = (next - now).max(Duration::from_millis(1));
        ws.get_mut().set_read_timeout(Some(wait))?;
        match ws.read() {
            Ok(Message::Text(text)) => {
                if let Some(reply) = driver.receive(&text) {
                    ws.send(Message::Text(encode_server(&reply)))?;
                }
            }
            Ok(Message::Close(_)) => return Ok(()),
            Ok(_) => {}
            Err(tungstenite::Error::Io(e))
                if matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut) => {}
            Err(tungstenite::Error::ConnectionClosed | tungstenite::Error::AlreadyClosed) => return Ok(()),
            Err(e) => return Err(e.into()),
        }
    }
}
