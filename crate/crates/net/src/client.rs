//! Synchronous client and a [`PlatformAccess`] over the wire.

use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::thread;
use std::time::Duration;

use auditlab_core::access::{AccessError, Catalog, PlatformAccess};
use auditlab_core::engine::{run_budgeted_audit, AuditError, AuditResult, BudgetPlan};
use auditlab_core::platform::{CreatorId, VideoId};
use auditlab_core::proxy::ProxySpec;
use auditlab_core::sources::{ApiAnswer, ScrapAnswer};
use serde::de::DeserializeOwned;
use thiserror::Error;

use crate::wire::{BudgetStatus, Op, Request, Response, WireError};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("server refused: {0}")]
    Refused(WireError),
    #[error("malformed response: {0}")]
    Protocol(String),
}

#[derive(Debug)]
pub struct Client {
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
    next_id: u64,
}

impl Client {
    pub fn connect(addr: impl ToSocketAddrs) -> io::Result<Client> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(Client {
            reader: BufReader::new(stream.try_clone()?),
            writer: BufWriter::new(stream),
            next_id: 1,
        })
    }

    /// Sends one raw line and returns the raw response line.
    pub fn send_raw(&mut self, line: &[u8]) -> io::Result<String> {
        self.writer.write_all(line)?;
        self.writer.write_all(b"\n")?;
        self.writer.flush()?;
        let mut out = String::new();
        if self.reader.read_line(&mut out)? == 0 {
            return Err(io::ErrorKind::UnexpectedEof.into());
        }
        Ok(out)
    }

    fn call<T: DeserializeOwned>(&mut self, op: Op, creator_id: Option<u64>, video_id: Option<u64>) -> Result<T, ClientError> {
        let id = self.next_id;
        self.next_id += 1;
        let req = Request {
            id,
            op,
            creator_id,
            video_id,
        };
        let line = self.send_raw(&serde_json::to_vec(&req).expect("serializable"))?;
        let resp: Response = serde_json::from_str(&line).map_err(|e| ClientError::Protocol(e.to_string()))?;
        if resp.id != id {
            return Err(ClientError::Protocol(format!("response id {} for request {id}", resp.id)));
        }
        match (resp.ok, resp.payload, resp.error) {
            (true, Some(p), _) => serde_json::from_value(p).map_err(|e| ClientError::Protocol(e.to_string())),
            (false, _, Some(e)) => Err(ClientError::Refused(e)),
            _ => Err(ClientError::Protocol("neither payload nor error".into())),
        }
    }

    pub fn catalog(&mut self) -> Result<Catalog, ClientError> {
        self.call(Op::Catalog, None, None)
    }

    pub fn api(&mut self, creator: CreatorId) -> Result<ApiAnswer, ClientError> {
        self.call(Op::Api, Some(creator.0), None)
    }

    pub fn scrape(&mut self, video: VideoId) -> Result<ScrapAnswer, ClientError> {
        self.call(Op::Scrape, None, Some(video.0))
    }

    pub fn budget(&mut self) -> Result<BudgetStatus, ClientError> {
        self.call(Op::Budget, None, None)
    }
}

/// Audit access through a [`Client`]. Rate-limited requests are retried
/// after a short pause; they cost no budget.
#[derive(Debug)]
pub struct RemoteAccess {
    client: Client,
    retry_pause: Duration,
}

impl RemoteAccess {
    pub fn connect(addr: impl ToSocketAddrs) -> io::Result<RemoteAccess> {
        Ok(RemoteAccess::new(Client::connect(addr)?))
    }

    pub fn new(client: Client) -> Self {
        RemoteAccess {
            client,
            retry_pause: Duration::from_millis(5),
        }
    }

    pub fn client(&mut self) -> &mut Client {
        &mut self.client
    }

    fn retrying<T>(&mut self, mut f: impl FnMut(&mut Client) -> Result<T, ClientError>) -> Result<T, AccessError> {
        loop {
            match f(&mut self.client) {
                Ok(v) => return Ok(v),
                Err(ClientError::Refused(WireError::RateLimited)) => thread::sleep(self.retry_pause),
                Err(ClientError::Refused(WireError::BudgetExhausted)) => return Err(AccessError::BudgetExhausted),
                Err(ClientError::Refused(WireError::UnknownId)) => return Err(AccessError::UnknownId),
                Err(ClientError::Refused(WireError::BadRequest)) => {
                    return Err(AccessError::Rejected(WireError::BadRequest.to_string()))
                }
                Err(e) => return Err(AccessError::Transport(e.to_string())),
            }
        }
    }
}

impl PlatformAccess for RemoteAccess {
    fn catalog(&mut self) -> Result<Catalog, AccessError> {
        self.retrying(Client::catalog)
    }

    fn api(&mut self, creator: CreatorId) -> Result<ApiAnswer, AccessError> {
        self.retrying(|c| c.api(creator))
    }

    fn scrape(&mut self, video: VideoId) -> Result<ScrapAnswer, AccessError> {
        self.retrying(|c| c.scrape(video))
    }
}

#[derive(Debug, Error)]
pub enum RemoteAuditError {
    #[error("cannot reach server: {0}")]
    Connect(#[from] io::Error),
    #[error(transparent)]
    Audit(#[from] AuditError),
}

/// [`run_budgeted_audit`] against a remote platform, on a fresh session.
pub fn remote_audit(addr: impl ToSocketAddrs, plan: &BudgetPlan, proxy: &ProxySpec) -> Result<AuditResult, RemoteAuditError> {
    let mut access = RemoteAccess::connect(addr)?;
    Ok(run_budgeted_audit(&mut access, plan, proxy)?)
}
