//! Query access to a platform, in-process or over the wire.
//!
//! Audits are written against [`PlatformAccess`] so the same code drives
//! an in-memory platform and a remote service.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::platform::{CreatorId, PlatformError, PlatformState, VideoId};
use crate::sources::{ApiAnswer, ManipulatedApi, ScrapAnswer};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AccessError {
    #[error("query budget exhausted")]
    BudgetExhausted,
    #[error("unknown id")]
    UnknownId,
    #[error("request rejected: {0}")]
    Rejected(String),
    #[error("transport failure: {0}")]
    Transport(String),
}

impl From<PlatformError> for AccessError {
    fn from(e: PlatformError) -> Self {
        match e {
            PlatformError::UnknownCreator(_) | PlatformError::UnknownVideo(_) => {
                AccessError::UnknownId
            }
            other => AccessError::Rejected(other.to_string()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub creator_id: CreatorId,
    pub video_ids: Vec<VideoId>,
}

/// Public index of the queryable input spaces: every creator and the ids of
/// its videos. Reading it costs no budget.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Catalog {
    pub creators: Vec<CatalogEntry>,
}

impl Catalog {
    pub fn of(state: &PlatformState) -> Self {
        Catalog {
            creators: state
                .creators()
                .iter()
                .map(|c| CatalogEntry {
                    creator_id: c.id,
                    video_ids: c.video_ids.clone(),
                })
                .collect(),
        }
    }

    pub fn n_creators(&self) -> usize {
        self.creators.len()
    }

    pub fn n_videos(&self) -> usize {
        self.creators.iter().map(|c| c.video_ids.len()).sum()
    }

    /// Mean number of videos per creator (`k`).
    pub fn mean_videos(&self) -> f64 {
        self.n_videos() as f64 / self.n_creators().max(1) as f64
    }
}

pub trait PlatformAccess {
    fn catalog(&mut self) -> Result<Catalog, AccessError>;
    fn api(&mut self, creator: CreatorId) -> Result<ApiAnswer, AccessError>;
    fn scrape(&mut self, video: VideoId) -> Result<ScrapAnswer, AccessError>;
}

/// In-process access to a (possibly manipulated) platform, unbudgeted.
#[derive(Clone, Debug)]
pub struct LocalAccess {
    api: Arc<ManipulatedApi>,
}

impl LocalAccess {
    pub fn new(api: Arc<ManipulatedApi>) -> Self {
        LocalAccess { api }
    }
}

impl PlatformAccess for LocalAccess {
    fn catalog(&mut self) -> Result<Catalog, AccessError> {
        Ok(Catalog::of(self.api.state()))
    }

    fn api(&mut self, creator: CreatorId) -> Result<ApiAnswer, AccessError> {
        Ok(self.api.api_query(creator)?)
    }

    fn scrape(&mut self, video: VideoId) -> Result<ScrapAnswer, AccessError> {
        Ok(self.api.scrape_query(video)?)
    }
}

/// Wraps an access and refuses data queries beyond `limit`.
#[derive(Debug)]
pub struct BudgetedAccess<A> {
    inner: A,
    limit: u64,
    spent: u64,
}

impl<A: PlatformAccess> BudgetedAccess<A> {
    pub fn new(inner: A, limit: u64) -> Self {
        BudgetedAccess {
            inner,
            limit,
            spent: 0,
        }
    }

    pub fn spent(&self) -> u64 {
        self.spent
    }

    fn charge(&mut self) -> Result<(), AccessError> {
        if self.spent >= self.limit {
            return Err(AccessError::BudgetExhausted);
        }
        self.spent += 1;
        Ok(())
    }
}

impl<A: PlatformAccess> PlatformAccess for BudgetedAccess<A> {
    fn catalog(&mut self) -> Result<Catalog, AccessError> {
        self.inner.catalog()
    }

    fn api(&mut self, creator: CreatorId) -> Result<ApiAnswer, AccessError> {
        self.charge()?;
        self.inner.api(creator)
    }

    fn scrape(&mut self, video: VideoId) -> Result<ScrapAnswer, AccessError> {
        self.charge()?;
        self.inner.scrape(video)
    }
}
