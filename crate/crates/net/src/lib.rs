//! The platform as a network service, and an auditor client for it.
//!
//! Protocol: one JSON object per `\n`-terminated line. Requests are
//! `{"id":u64,"op":"catalog"|"api"|"scrape"|"budget","creator_id"?:u64,"video_id"?:u64}`;
//! responses are `{"id":u64,"ok":true,"payload":{..}}` or
//! `{"id":u64,"ok":false,"error":"budget_exhausted"|"rate_limited"|"unknown_id"|"bad_request"}`.

mod client;
mod server;
pub mod wire;

pub use client::{remote_audit, Client, ClientError, RemoteAccess, RemoteAuditError};
pub use server::{serve, ServerConfig, ServerHandle, SessionBudget, TokenBucket, MAX_LINE};
