//! Platform service: one thread per connection, each connection a session
//! with its own query budget and rate limit.

use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::Instant;

use auditlab_core::access::Catalog;
use auditlab_core::platform::{CreatorId, PlatformError, VideoId};
use auditlab_core::sources::ManipulatedApi;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::wire::{parse_request, BudgetStatus, Op, Request, Response, WireError};

/// Longest request line accepted; longer lines get `bad_request`.
pub const MAX_LINE: usize = 64 * 1024;

#[derive(Copy, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ServerConfig {
    /// Data requests (`api`, `scrape`) allowed per session.
    pub budget_limit: Option<u64>,
    /// Data requests per second per session.
    pub rate_limit: Option<f64>,
}

/// Token bucket holding up to `rate` tokens, refilled at `rate` per second.
#[derive(Debug)]
pub struct TokenBucket {
    rate: f64,
    tokens: f64,
    last: Instant,
}

impl TokenBucket {
    pub fn new(rate: f64) -> Self {
        TokenBucket {
            rate,
            tokens: rate,
            last: Instant::now(),
        }
    }

    pub fn try_take(&mut self) -> bool {
        let now = Instant::now();
        self.tokens = (self.tokens + now.duration_since(self.last).as_secs_f64() * self.rate).min(self.rate);
        self.last = now;
        if self.tokens >= 1.0 {
            self.tokens -= 1.0;
            true
        } else {
            false
        }
    }
}

/// Per-session budget. Charging is a single compare-and-swap, so `spent`
/// never passes `limit` even if several threads share the session.
#[derive(Debug)]
pub struct SessionBudget {
    limit: Option<u64>,
    spent: AtomicU64,
}

impl SessionBudget {
    pub fn new(limit: Option<u64>) -> Self {
        SessionBudget {
            limit,
            spent: AtomicU64::new(0),
        }
    }

    pub fn try_charge(&self) -> bool {
        let limit = self.limit.unwrap_or(u64::MAX);
        self.spent
            .fetch_update(Ordering::AcqRel, Ordering::Acquire, |s| (s < limit).then_some(s + 1))
            .is_ok()
    }

    pub fn status(&self) -> BudgetStatus {
        let spent = self.spent.load(Ordering::Acquire);
        BudgetStatus {
            limit: self.limit,
            spent,
            remaining: self.limit.map(|l| l.saturating_sub(spent)),
        }
    }
}

struct Shared {
    api: Arc<ManipulatedApi>,
    catalog: Value,
    config: ServerConfig,
}

struct Session {
    shared: Arc<Shared>,
    budget: SessionBudget,
    bucket: Option<TokenBucket>,
}

impl Session {
    fn handle(&mut self, req: &Request) -> Result<Value, WireError> {
        match req.op {
            Op::Catalog => Ok(self.shared.catalog.clone()),
            Op::Budget => Ok(serde_json::to_value(self.budget.status()).expect("serializable")),
            Op::Api | Op::Scrape => {
                let key = match req.op {
                    Op::Api => req.creator_id,
                    _ => req.video_id,
                };
                let key = key.ok_or(WireError::BadRequest)?;
                if self.budget.status().remaining == Some(0) {
                    return Err(WireError::BudgetExhausted);
                }
                if let Some(bucket) = &mut self.bucket {
                    if !bucket.try_take() {
                        return Err(WireError::RateLimited);
                    }
                }
                if !self.budget.try_charge() {
                    return Err(WireError::BudgetExhausted);
                }
                let api = &self.shared.api;
                let value = match req.op {
                    Op::Api => api.api_query(CreatorId(key)).map(|a| serde_json::to_value(a)),
                    _ => api.scrape_query(VideoId(key)).map(|s| serde_json::to_value(s)),
                };
                match value {
                    Ok(v) => Ok(v.expect("serializable")),
                    Err(PlatformError::UnknownCreator(_) | PlatformError::UnknownVideo(_)) => {
                        Err(WireError::UnknownId)
                    }
                    Err(_) => Err(WireError::BadRequest),
                }
            }
        }
    }

    fn respond(&mut self, line: &[u8]) -> Response {
        match parse_request(line) {
            Ok(req) => match self.handle(&req) {
                Ok(payload) => Response::success(req.id, payload),
                Err(e) => Response::failure(req.id, e),
            },
            Err(id) => Response::failure(id, WireError::BadRequest),
        }
    }
}

enum Line {
    Complete,
    TooLong,
    Eof,
}

/// Reads up to and excluding `\n` into `buf`. Overlong lines are consumed
/// to their end and reported, without buffering them.
fn read_line(reader: &mut impl BufRead, buf: &mut Vec<u8>) -> io::Result<Line> {
    buf.clear();
    let mut too_long = false;
    let mut any = false;
    loop {
        let chunk = reader.fill_buf()?;
        if chunk.is_empty() {
            return Ok(if !any {
                Line::Eof
            } else if too_long {
                Line::TooLong
            } else {
                Line::Complete
            });
        }
        any = true;
        let (used, done) = match chunk.iter().position(|&b| b == b'\n') {
            Some(i) => (i + 1, true),
            None => (chunk.len(), false),
        };
        let data = &chunk[..if done { used - 1 } else { used }];
        if !too_long {
            if buf.len() + data.len() > MAX_LINE {
                too_long = true;
                buf.clear();
            } else {
                buf.extend_from_slice(data);
            }
        }
        reader.consume(used);
        if done {
            return Ok(if too_long { Line::TooLong } else { Line::Complete });
        }
    }
}

fn serve_connection(stream: TcpStream, shared: Arc<Shared>) -> io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut writer = BufWriter::new(stream);
    let mut session = Session {
        budget: SessionBudget::new(shared.config.budget_limit),
        bucket: shared.config.rate_limit.map(TokenBucket::new),
        shared,
    };
    let mut buf = Vec::new();
    loop {
        let response = match read_line(&mut reader, &mut buf)? {
            Line::Eof => return Ok(()),
            Line::TooLong => Response::failure(0, WireError::BadRequest),
            Line::Complete => {
                if buf.last() == Some(&b'\r') {
                    buf.pop();
                }
                session.respond(&buf)
            }
        };
        serde_json::to_writer(&mut writer, &response)?;
        writer.write_all(b"\n")?;
        writer.flush()?;
    }
}

/// A running service. Dropping the handle stops accepting new sessions.
#[derive(Debug)]
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    accept: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops accepting connections. Open sessions run until their client
    /// disconnects.
    pub fn shutdown(mut self) {
        self.stop_accepting();
    }

    /// Blocks until the accept loop ends.
    pub fn wait(mut self) {
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }

    fn stop_accepting(&mut self) {
        if let Some(h) = self.accept.take() {
            self.stop.store(true, Ordering::SeqCst);
            // Wake the blocking accept.
            let _ = TcpStream::connect(self.addr);
            let _ = h.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.stop_accepting();
    }
}

/// Binds `addr` and serves `api` until the handle is shut down.
pub fn serve(api: Arc<ManipulatedApi>, addr: impl ToSocketAddrs, config: ServerConfig) -> io::Result<ServerHandle> {
    if let Some(rate) = config.rate_limit {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(io::Error::new(io::ErrorKind::InvalidInput, "rate limit must be positive"));
        }
    }
    let listener = TcpListener::bind(addr)?;
    let addr = listener.local_addr()?;
    let shared = Arc::new(Shared {
        catalog: serde_json::to_value(Catalog::of(api.state())).expect("serializable"),
        api,
        config,
    });
    let stop = Arc::new(AtomicBool::new(false));
    let stop_flag = stop.clone();
    let accept = thread::spawn(move || {
        for stream in listener.incoming() {
            if stop_flag.load(Ordering::SeqCst) {
                break;
            }
            let Ok(stream) = stream else { continue };
            let _ = stream.set_nodelay(true);
            let shared = shared.clone();
            thread::spawn(move || {
                let _ = serve_connection(stream, shared);
            });
        }
    });
    Ok(ServerHandle {
        addr,
        stop,
        accept: Some(accept),
    })
}
