//! Line-delimited JSON messages.

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Op {
    Catalog,
    Api,
    Scrape,
    Budget,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Request {
    pub id: u64,
    pub op: Op,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub creator_id: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub video_id: Option<u64>,
}

/// In-band error codes.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WireError {
    BudgetExhausted,
    RateLimited,
    UnknownId,
    BadRequest,
}

impl WireError {
    pub fn code(self) -> &'static str {
        match self {
            WireError::BudgetExhausted => "budget_exhausted",
            WireError::RateLimited => "rate_limited",
            WireError::UnknownId => "unknown_id",
            WireError::BadRequest => "bad_request",
        }
    }
}

impl std::fmt::Display for WireError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub id: u64,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<WireError>,
}

impl Response {
    pub fn success(id: u64, payload: Value) -> Self {
        Response {
            id,
            ok: true,
            payload: Some(payload),
            error: None,
        }
    }

    pub fn failure(id: u64, error: WireError) -> Self {
        Response {
            id,
            ok: false,
            payload: None,
            error: Some(error),
        }
    }
}

/// Payload of the `budget` op. `None` limits mean unlimited.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetStatus {
    pub limit: Option<u64>,
    pub spent: u64,
    pub remaining: Option<u64>,
}

/// Parses one request line. On failure returns the id to echo: the
/// line's `id` when it has a usable one, else 0.
pub fn parse_request(line: &[u8]) -> Result<Request, u64> {
    let value: Value = serde_json::from_slice(line).map_err(|_| 0u64)?;
    let id = value.get("id").and_then(Value::as_u64).unwrap_or(0);
    serde_json::from_value(value).map_err(|_| id)
}
