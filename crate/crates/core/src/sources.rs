//! The two query interfaces of a platform.
//!
//! `A` maps a creator to its declared popularity and earnings and may be
//! manipulated by the platform. `B` maps a video to its views, rate and
//! creator and is always honest.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::platform::{ceil_share, CreatorId, Micros, PlatformError, PlatformState, VideoId};

#[derive(Debug, Error, PartialEq)]
pub enum SourceError {
    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),
    #[error(transparent)]
    Platform(#[from] PlatformError),
}

/// One answer of the API `A`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ApiAnswer {
    pub creator_id: CreatorId,
    pub popularity: u64,
    pub earnings: Micros,
}

impl ApiAnswer {
    pub fn sample(&self) -> (u64, Micros) {
        (self.popularity, self.earnings)
    }
}

/// One answer of the scrape interface `B`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScrapAnswer {
    pub video_id: VideoId,
    pub views: u64,
    pub rate: Micros,
    pub creator_id: CreatorId,
}

/// Honest scrape of one video.
pub fn scrape_query(state: &PlatformState, video: VideoId) -> Result<ScrapAnswer, PlatformError> {
    let v = state.video(video)?;
    Ok(ScrapAnswer {
        video_id: v.id,
        views: v.views,
        rate: v.rate,
        creator_id: v.creator_id,
    })
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    None,
    DemotePrivileged,
    PromoteRegular,
    BubbleSwap,
}

impl StrategyKind {
    pub const MANIPULATIVE: [StrategyKind; 3] = [
        StrategyKind::DemotePrivileged,
        StrategyKind::PromoteRegular,
        StrategyKind::BubbleSwap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::None => "none",
            StrategyKind::DemotePrivileged => "demote-privileged",
            StrategyKind::PromoteRegular => "promote-regular",
            StrategyKind::BubbleSwap => "bubble-swap",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = SourceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "none" | "honest" => Ok(StrategyKind::None),
            "demote-privileged" | "demote" => Ok(StrategyKind::DemotePrivileged),
            "promote-regular" | "promote" => Ok(StrategyKind::PromoteRegular),
            "bubble-swap" | "bubble" => Ok(StrategyKind::BubbleSwap),
            other => Err(SourceError::InvalidStrategy(format!(
                "unknown strategy `{other}`"
            ))),
        }
    }
}

/// A fairwashing strategy applied to the earnings declared by `A`.
///
/// `x` is the manipulated share: a fraction of the privileged (resp.
/// regular) creators for the demote (resp. promote) strategies, and a
/// fraction of the bubble-sort passes needed to fully sort for the swap
/// strategy.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManipulationStrategy {
    pub kind: StrategyKind,
    pub x: f64,
    pub seed: u64,
}

impl ManipulationStrategy {
    pub fn honest() -> Self {
        ManipulationStrategy {
            kind: StrategyKind::None,
            x: 0.0,
            seed: 0,
        }
    }

    pub fn new(kind: StrategyKind, x: f64, seed: u64) -> Result<Self, SourceError> {
        let s = ManipulationStrategy { kind, x, seed };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), SourceError> {
        if !(0.0..=1.0).contains(&self.x) {
            return Err(SourceError::InvalidStrategy(format!(
                "x must lie in [0, 1], got {}",
                self.x
            )));
        }
        Ok(())
    }
}

impl fmt::Display for ManipulationStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.kind == StrategyKind::None {
            return f.write_str("none");
        }
        write!(f, "{}:x={}:seed={}", self.kind, self.x, self.seed)
    }
}

/// Parsed form of a strategy descriptor such as
/// `demote-privileged:x=0.2:seed=7`. Both keys are optional, so a bare
/// family name (`bubble`) is accepted where a sweep supplies `x` itself.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategySpec {
    pub kind: StrategyKind,
    pub x: Option<f64>,
    pub seed: Option<u64>,
}

impl FromStr for StrategySpec {
    type Err = SourceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |msg: String| SourceError::InvalidStrategy(msg);
        let mut parts = s.split(':');
        let kind: StrategyKind = parts.next().unwrap_or_default().parse()?;
        let mut spec = StrategySpec {
            kind,
            x: None,
            seed: None,
        };
        for part in parts {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got `{part}`")))?;
            match key.trim() {
                "x" => {
                    let x: f64 = value
                        .trim()
                        .parse()
                        .map_err(|_| bad(format!("bad x `{value}`")))?;
                    spec.x = Some(x);
                }
                "seed" => {
                    let seed = value
                        .trim()
                        .parse()
                        .map_err(|_| bad(format!("bad seed `{value}`")))?;
                    spec.seed = Some(seed);
                }
                other => return Err(bad(format!("unknown key `{other}`"))),
            }
        }
        Ok(spec)
    }
}

impl StrategySpec {
    /// Resolves to a concrete strategy; `x` is required unless the kind is
    /// `none`, and the seed falls back to `default_seed`.
    pub fn resolve(&self, default_seed: u64) -> Result<ManipulationStrategy, SourceError> {
        let x = match (self.kind, self.x) {
            (StrategyKind::None, x) => x.unwrap_or(0.0),
            (_, Some(x)) => x,
            (kind, None) => {
                return Err(SourceError::InvalidStrategy(format!(
                    "strategy `{kind}` needs an x=<fraction>"
                )))
            }
        };
        ManipulationStrategy::new(self.kind, x, self.seed.unwrap_or(default_seed))
    }
}

impl FromStr for ManipulationStrategy {
    type Err = SourceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse::<StrategySpec>()?.resolve(0)
    }
}

/// Number of bubble-sort passes that perform at least one swap before `list`
/// is sorted nondecreasingly.
///
/// Each pass moves every element that has a strictly larger element on its
/// left exactly one step to the left, so the count is the largest number
/// of strictly larger predecessors of any element.
pub fn passes_to_sort(list: &[Micros]) -> usize {
    let mut seen: Vec<Micros> = Vec::with_capacity(list.len());
    let mut passes = 0;
    for &value in list {
        let not_greater = seen.partition_point(|&s| s <= value);
        passes = passes.max(seen.len() - not_greater);
        seen.insert(not_greater, value);
    }
    passes
}

/// Runs up to `passes` bubble passes over `list`, stopping early once a
/// pass performs no swap. Returns the number of passes that swapped.
pub fn bubble_passes(list: &mut [Micros], passes: usize) -> usize {
    let mut done = 0;
    for _ in 0..passes {
        let mut swapped = false;
        for i in 1..list.len() {
            if list[i - 1] > list[i] {
                list.swap(i - 1, i);
                swapped = true;
            }
        }
        if !swapped {
            break;
        }
        done += 1;
    }
    done
}

/// Creator ids ordered by increasing true popularity (ties by id).
pub fn popularity_order(state: &PlatformState) -> Vec<CreatorId> {
    let mut order: Vec<(u64, CreatorId)> = state
        .creators()
        .iter()
        .map(|c| (state.true_popularity(c.id).expect("own creator"), c.id))
        .collect();
    order.sort_unstable();
    order.into_iter().map(|(_, id)| id).collect()
}

/// The first `⌈x·|group|⌉` creators of a seeded shuffle of `group`.
/// Prefixes of one shuffle, so the chosen sets are nested in `x`.
fn seeded_prefix(mut group: Vec<CreatorId>, x: f64, seed: u64) -> Vec<CreatorId> {
    group.sort_unstable();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    group.shuffle(&mut rng);
    group.truncate(ceil_share(group.len(), x));
    group
}

/// Earnings `A` will declare for every creator, indexed by creator id.
pub fn build_declared_earnings(
    state: &PlatformState,
    strategy: &ManipulationStrategy,
) -> Result<Vec<Micros>, SourceError> {
    strategy.validate()?;
    let mut declared: Vec<Micros> = state
        .creators()
        .iter()
        .map(|c| state.true_earnings(c.id).expect("own creator"))
        .collect();
    let config = state.config();
    let mut restate = |ids: Vec<CreatorId>, rate: Micros| {
        for id in ids {
            let popularity = state.true_popularity(id).expect("own creator");
            declared[id.0 as usize] = rate.times(popularity);
        }
    };
    match strategy.kind {
        StrategyKind::None => {}
        StrategyKind::DemotePrivileged => restate(
            seeded_prefix(state.privileged_ids(), strategy.x, strategy.seed),
            config.rate_regular,
        ),
        StrategyKind::PromoteRegular => restate(
            seeded_prefix(state.regular_ids(), strategy.x, strategy.seed),
            config.rate_privileged,
        ),
        StrategyKind::BubbleSwap => {
            let order = popularity_order(state);
            let mut list: Vec<Micros> = order.iter().map(|id| declared[id.0 as usize]).collect();
            let full = passes_to_sort(&list);
            let passes = (strategy.x * full as f64).round() as usize;
            let passes = if strategy.x >= 1.0 { full } else { passes.min(full) };
            bubble_passes(&mut list, passes);
            for (id, e) in order.iter().zip(list) {
                declared[id.0 as usize] = e;
            }
        }
    }
    Ok(declared)
}

/// The API `A` of a platform, answering from a declared-earnings table that
/// is fixed at construction so repeated queries are stable.
#[derive(Clone, Debug)]
pub struct ManipulatedApi {
    state: Arc<PlatformState>,
    strategy: ManipulationStrategy,
    declared: Vec<Micros>,
}

impl ManipulatedApi {
    pub fn new(state: Arc<PlatformState>, strategy: ManipulationStrategy) -> Result<Self, SourceError> {
        let declared = build_declared_earnings(&state, &strategy)?;
        Ok(ManipulatedApi {
            state,
            strategy,
            declared,
        })
    }

    pub fn honest(state: Arc<PlatformState>) -> Self {
        Self::new(state, ManipulationStrategy::honest()).expect("honest strategy is valid")
    }

    pub fn state(&self) -> &Arc<PlatformState> {
        &self.state
    }

    pub fn strategy(&self) -> &ManipulationStrategy {
        &self.strategy
    }

    /// Popularity is always reported truthfully; only earnings may differ.
    pub fn api_query(&self, creator: CreatorId) -> Result<ApiAnswer, PlatformError> {
        let popularity = self.state.true_popularity(creator)?;
        Ok(ApiAnswer {
            creator_id: creator,
            popularity,
            earnings: self.declared[creator.0 as usize],
        })
    }

    pub fn all_answers(&self) -> Vec<ApiAnswer> {
        self.state
            .creators()
            .iter()
            .map(|c| self.api_query(c.id).expect("own creator"))
            .collect()
    }

    /// Creators whose declared earnings differ from the truth.
    pub fn manipulated_creators(&self) -> Vec<CreatorId> {
        self.state
            .creators()
            .iter()
            .filter(|c| self.declared[c.id.0 as usize] != self.state.true_earnings(c.id).expect("own"))
            .map(|c| c.id)
            .collect()
    }

    pub fn scrape_query(&self, video: VideoId) -> Result<ScrapAnswer, PlatformError> {
        scrape_query(&self.state, video)
    }
}
