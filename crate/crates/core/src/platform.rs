//! Ground-truth video platform: creators, their videos, and monetization.
//!
//! The platform is the un-manipulable truth an audit tries to recover. All
//! money is held in integer micro-dollars so that consistency checks
//! between data sources are exact comparisons.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimators::{economic_parity, EstimatorError, ParityEstimate};

/// Version tag written into serialized platform documents.
pub const PLATFORM_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum PlatformError {
    #[error("platform must contain at least one creator")]
    EmptyPlatform,
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("unknown creator id {0}")]
    UnknownCreator(CreatorId),
    #[error("unknown video id {0}")]
    UnknownVideo(VideoId),
    #[error("malformed platform document: {0}")]
    MalformedDocument(String),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CreatorId(pub u64);

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VideoId(pub u64);

impl fmt::Display for CreatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for VideoId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An amount of money in micro-dollars (1 $ = 1 000 000 μ$).
#[derive(
    Copy, Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Micros(pub u64);

impl Micros {
    pub const ZERO: Micros = Micros(0);

    pub fn from_dollars_exact(dollars: u64) -> Self {
        Micros(dollars * 1_000_000)
    }

    /// `views` views paid at `self` per view.
    pub fn times(self, views: u64) -> Micros {
        Micros(self.0 * views)
    }
}

impl Add for Micros {
    type Output = Micros;
    fn add(self, rhs: Micros) -> Micros {
        Micros(self.0 + rhs.0)
    }
}

impl AddAssign for Micros {
    fn add_assign(&mut self, rhs: Micros) {
        self.0 += rhs.0;
    }
}

impl Sum for Micros {
    fn sum<I: Iterator<Item = Micros>>(iter: I) -> Micros {
        iter.fold(Micros::ZERO, Add::add)
    }
}

impl fmt::Display for Micros {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "${}.{:06}", self.0 / 1_000_000, self.0 % 1_000_000)
    }
}

/// Distribution of the number of videos each creator publishes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum VideoCountLaw {
    /// `u ~ Exp(rate)` conditioned on `u <= 1`, count = `round(max·(1−u))`
    /// clamped to `[min, max]`. Most creators publish many videos.
    ReversedExponential { rate: f64, min: u32, max: u32 },
    /// count = `round(Exp(mean))` clamped to `[min, max]`.
    Exponential { mean: f64, min: u32, max: u32 },
}

impl Default for VideoCountLaw {
    fn default() -> Self {
        VideoCountLaw::ReversedExponential {
            rate: 3.0,
            min: 1,
            max: 100,
        }
    }
}

impl VideoCountLaw {
    pub fn bounds(&self) -> (u32, u32) {
        match *self {
            VideoCountLaw::ReversedExponential { min, max, .. }
            | VideoCountLaw::Exponential { min, max, .. } => (min, max),
        }
    }

    fn validate(&self) -> Result<(), PlatformError> {
        let (min, max) = self.bounds();
        if min < 1 {
            return Err(PlatformError::InvalidConfig(
                "video count lower bound must be at least 1".into(),
            ));
        }
        if min > max {
            return Err(PlatformError::InvalidConfig(format!(
                "video count range [{min}, {max}] is empty"
            )));
        }
        let param = match *self {
            VideoCountLaw::ReversedExponential { rate, .. } => rate,
            VideoCountLaw::Exponential { mean, .. } => mean,
        };
        if !(param.is_finite() && param > 0.0) {
            return Err(PlatformError::InvalidConfig(format!(
                "video count law parameter must be positive, got {param}"
            )));
        }
        Ok(())
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let (min, max) = self.bounds();
        let raw = match *self {
            VideoCountLaw::ReversedExponential { rate, .. } => {
                let exp = Exp::new(rate).expect("validated rate");
                let u = loop {
                    let u: f64 = exp.sample(rng);
                    if u <= 1.0 {
                        break u;
                    }
                };
                (f64::from(max) * (1.0 - u)).round()
            }
            VideoCountLaw::Exponential { mean, .. } => {
                let exp = Exp::new(1.0 / mean).expect("validated mean");
                let u: f64 = exp.sample(rng);
                u.round()
            }
        };
        (raw.clamp(f64::from(min), f64::from(max))) as u32
    }
}

impl fmt::Display for VideoCountLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VideoCountLaw::ReversedExponential { rate, min, max } => {
                write!(f, "reversed-exponential:rate={rate}:min={min}:max={max}")
            }
            VideoCountLaw::Exponential { mean, min, max } => {
                write!(f, "exponential:mean={mean}:min={min}:max={max}")
            }
        }
    }
}

impl FromStr for VideoCountLaw {
    type Err = PlatformError;

    /// Parses `reversed-exponential[:rate=R][:min=A][:max=B]` or
    /// `exponential[:mean=M][:min=A][:max=B]`; omitted keys take defaults.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |msg: String| PlatformError::InvalidConfig(msg);
        let mut parts = s.split(':');
        let name = parts.next().unwrap_or_default().trim();
        let (mut param, mut min, mut max) = (3.0_f64, 1_u32, 100_u32);
        let param_key = match name {
            "reversed-exponential" => "rate",
            "exponential" => "mean",
            other => return Err(bad(format!("unknown video count law `{other}`"))),
        };
        for part in parts {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got `{part}`")))?;
            let value = value.trim();
            match key.trim() {
                k if k == param_key => {
                    param = value.parse().map_err(|_| bad(format!("bad {k}: `{value}`")))?
                }
                "min" => min = value.parse().map_err(|_| bad(format!("bad min: `{value}`")))?,
                "max" => max = value.parse().map_err(|_| bad(format!("bad max: `{value}`")))?,
                other => return Err(bad(format!("unknown key `{other}` for {name}"))),
            }
        }
        let law = if name == "exponential" {
            VideoCountLaw::Exponential {
                mean: param,
                min,
                max,
            }
        } else {
            VideoCountLaw::ReversedExponential {
                rate: param,
                min,
                max,
            }
        };
        law.validate()?;
        Ok(law)
    }
}

/// Inclusive range of per-video view counts.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewsRange {
    pub min: u64,
    pub max: u64,
}

impl Default for ViewsRange {
    fn default() -> Self {
        ViewsRange { min: 0, max: 1000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub n_creators: usize,
    pub privileged_fraction: f64,
    pub video_count_law: VideoCountLaw,
    pub views_range: ViewsRange,
    /// Per-view rate of privileged creators (r1).
    pub rate_privileged: Micros,
    /// Per-view rate of regular creators (r0).
    pub rate_regular: Micros,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n_creators: 1000,
            privileged_fraction: 1.0 / 3.0,
            video_count_law: VideoCountLaw::default(),
            views_range: ViewsRange::default(),
            rate_privileged: Micros(100_000),
            rate_regular: Micros(10_000),
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn with_seed(seed: u64) -> Self {
        GeneratorConfig {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), PlatformError> {
        if self.n_creators == 0 {
            return Err(PlatformError::EmptyPlatform);
        }
        let f = self.privileged_fraction;
        if !(f > 0.0 && f < 1.0) {
            return Err(PlatformError::InvalidConfig(format!(
                "privileged fraction must lie in (0, 1), got {f}"
            )));
        }
        if self.rate_regular.0 == 0 || self.rate_privileged <= self.rate_regular {
            return Err(PlatformError::InvalidConfig(
                "rates must satisfy rate_privileged > rate_regular > 0".into(),
            ));
        }
        if self.views_range.min > self.views_range.max {
            return Err(PlatformError::InvalidConfig("views range is empty".into()));
        }
        self.video_count_law.validate()
    }

    /// Number of privileged creators: `⌈n · privileged_fraction⌉`.
    pub fn privileged_count(&self) -> usize {
        ceil_share(self.n_creators, self.privileged_fraction)
    }
}

/// `⌈n · fraction⌉`, tolerant to float noise in products that are
/// mathematically integral (e.g. `0.2 · 335`).
pub fn ceil_share(n: usize, fraction: f64) -> usize {
    let exact = n as f64 * fraction;
    let share = (exact - 1e-9).ceil().max(0.0) as usize;
    share.min(n)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Creator {
    pub id: CreatorId,
    pub privileged: bool,
    pub rate: Micros,
    pub video_ids: Vec<VideoId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Video {
    pub id: VideoId,
    pub creator_id: CreatorId,
    pub views: u64,
    pub rate: Micros,
}

/// On-disk form of a platform.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlatformDocument {
    pub format_version: u32,
    pub config: GeneratorConfig,
    pub creators: Vec<Creator>,
    pub videos: Vec<Video>,
}

/// The immutable ground-truth platform.
///
/// Creator and video ids are dense: creator `i` is `creators[i]` and video
/// `j` is `videos[j]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PlatformDocument", into = "PlatformDocument")]
pub struct PlatformState {
    config: GeneratorConfig,
    creators: Vec<Creator>,
    videos: Vec<Video>,
}

impl From<PlatformState> for PlatformDocument {
    fn from(state: PlatformState) -> Self {
        PlatformDocument {
            format_version: PLATFORM_FORMAT_VERSION,
            config: state.config,
            creators: state.creators,
            videos: state.videos,
        }
    }
}

impl TryFrom<PlatformDocument> for PlatformState {
    type Error = PlatformError;

    fn try_from(doc: PlatformDocument) -> Result<Self, Self::Error> {
        let bad = |msg: String| PlatformError::MalformedDocument(msg);
        if doc.format_version != PLATFORM_FORMAT_VERSION {
            return Err(bad(format!(
                "unsupported format version {}",
                doc.format_version
            )));
        }
        if doc.creators.is_empty() {
            return Err(PlatformError::EmptyPlatform);
        }
        for (i, v) in doc.videos.iter().enumerate() {
            if v.id.0 != i as u64 {
                return Err(bad(format!("video at position {i} has id {}", v.id)));
            }
        }
        let mut owner = vec![None; doc.videos.len()];
        for (i, c) in doc.creators.iter().enumerate() {
            if c.id.0 != i as u64 {
                return Err(bad(format!("creator at position {i} has id {}", c.id)));
            }
            if c.video_ids.is_empty() {
                return Err(bad(format!("creator {} has no videos", c.id)));
            }
            let expected_rate = if c.privileged {
                doc.config.rate_privileged
            } else {
                doc.config.rate_regular
            };
            if c.rate != expected_rate {
                return Err(bad(format!("creator {} has inconsistent rate", c.id)));
            }
            for vid in &c.video_ids {
                let slot = owner
                    .get_mut(vid.0 as usize)
                    .ok_or_else(|| bad(format!("creator {} lists unknown video {vid}", c.id)))?;
                if slot.is_some() {
                    return Err(bad(format!("video {vid} listed twice")));
                }
                *slot = Some(c.id);
            }
        }
        for (v, own) in doc.videos.iter().zip(&owner) {
            match own {
                Some(cid) if *cid == v.creator_id => {}
                _ => return Err(bad(format!("video {} has inconsistent owner", v.id))),
            }
            if v.rate != doc.creators[v.creator_id.0 as usize].rate {
                return Err(bad(format!("video {} rate differs from its creator", v.id)));
            }
        }
        Ok(PlatformState {
            config: doc.config,
            creators: doc.creators,
            videos: doc.videos,
        })
    }
}

/// Generates the ground-truth platform for `config`. Deterministic per seed.
///
/// Privileged creators are the prefix of a seeded Fisher–Yates shuffle, so
/// for a fixed seed a larger `privileged_fraction` yields a superset.
pub fn generate_platform(config: &GeneratorConfig) -> Result<PlatformState, PlatformError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.n_creators;

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut privileged = vec![false; n];
    for &i in &order[..config.privileged_count()] {
        privileged[i] = true;
    }

    let mut creators = Vec::with_capacity(n);
    let mut videos = Vec::new();
    for (i, &is_privileged) in privileged.iter().enumerate() {
        let rate = if is_privileged {
            config.rate_privileged
        } else {
            config.rate_regular
        };
        let count = config.video_count_law.sample(&mut rng);
        let mut video_ids = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let id = VideoId(videos.len() as u64);
            let views = rng.random_range(config.views_range.min..=config.views_range.max);
            videos.push(Video {
                id,
                creator_id: CreatorId(i as u64),
                views,
                rate,
            });
            video_ids.push(id);
        }
        creators.push(Creator {
            id: CreatorId(i as u64),
            privileged: is_privileged,
            rate,
            video_ids,
        });
    }

    Ok(PlatformState {
        config: config.clone(),
        creators,
        videos,
    })
}

impl PlatformState {
    pub fn config(&self) -> &GeneratorConfig {
        &self.config
    }

    pub fn creators(&self) -> &[Creator] {
        &self.creators
    }

    pub fn videos(&self) -> &[Video] {
        &self.videos
    }

    pub fn creator(&self, id: CreatorId) -> Result<&Creator, PlatformError> {
        self.creators
            .get(id.0 as usize)
            .ok_or(PlatformError::UnknownCreator(id))
    }

    pub fn video(&self, id: VideoId) -> Result<&Video, PlatformError> {
        self.videos
            .get(id.0 as usize)
            .ok_or(PlatformError::UnknownVideo(id))
    }

    pub fn videos_of(&self, id: CreatorId) -> Result<impl Iterator<Item = &Video> + '_, PlatformError> {
        let creator = self.creator(id)?;
        Ok(creator
            .video_ids
            .iter()
            .map(move |vid| &self.videos[vid.0 as usize]))
    }

    pub fn privileged_ids(&self) -> Vec<CreatorId> {
        self.creators
            .iter()
            .filter(|c| c.privileged)
            .map(|c| c.id)
            .collect()
    }

    pub fn regular_ids(&self) -> Vec<CreatorId> {
        self.creators
            .iter()
            .filter(|c| !c.privileged)
            .map(|c| c.id)
            .collect()
    }

    /// Size of the combined input space of both data sources.
    pub fn input_space_size(&self) -> usize {
        self.creators.len() + self.videos.len()
    }

    /// Total views over all of the creator's videos.
    pub fn true_popularity(&self, id: CreatorId) -> Result<u64, PlatformError> {
        Ok(self.videos_of(id)?.map(|v| v.views).sum())
    }

    /// Σ views · rate over the creator's videos.
    pub fn true_earnings(&self, id: CreatorId) -> Result<Micros, PlatformError> {
        Ok(self.videos_of(id)?.map(|v| v.rate.times(v.views)).sum())
    }

    /// (popularity, earnings) of every creator, in id order.
    pub fn true_samples(&self) -> Vec<(u64, Micros)> {
        self.creators
            .iter()
            .map(|c| {
                (
                    self.true_popularity(c.id).expect("own creator"),
                    self.true_earnings(c.id).expect("own creator"),
                )
            })
            .collect()
    }

    /// Economic parity of the ground truth over all creators.
    pub fn true_parity(&self) -> Result<ParityEstimate, EstimatorError> {
        economic_parity(&self.true_samples())
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string(self)
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(views: &[&[u64]], privileged: &[bool]) -> PlatformState {
        let config = GeneratorConfig::default();
        let mut creators = Vec::new();
        let mut videos = Vec::new();
        for (i, (vs, &p)) in views.iter().zip(privileged).enumerate() {
            let rate = if p {
                config.rate_privileged
            } else {
                config.rate_regular
            };
            let mut ids = Vec::new();
            for &m in vs.iter() {
                let id = VideoId(videos.len() as u64);
                videos.push(Video {
                    id,
                    creator_id: CreatorId(i as u64),
                    views: m,
                    rate,
                });
                ids.push(id);
            }
            creators.push(Creator {
                id: CreatorId(i as u64),
                privileged: p,
                rate,
                video_ids: ids,
            });
        }
        PlatformState::try_from(PlatformDocument {
            format_version: PLATFORM_FORMAT_VERSION,
            config,
            creators,
            videos,
        })
        .unwrap()
    }

    #[test]
    fn default_platform_has_expected_shape() {
        let state = generate_platform(&GeneratorConfig::with_seed(11)).unwrap();
        assert_eq!(state.creators().len(), 1000);
        let privileged = state.privileged_ids().len();
        assert!(privileged == 333 || privileged == 334, "{privileged}");
        for c in state.creators() {
            assert!((1..=100).contains(&c.video_ids.len()));
        }
        assert!(state.videos().iter().all(|v| v.views <= 1000));
    }

    #[test]
    fn single_creator_is_privileged() {
        let config = GeneratorConfig {
            n_creators: 1,
            ..GeneratorConfig::with_seed(3)
        };
        let state = generate_platform(&config).unwrap();
        assert!(state.creators()[0].privileged);
        assert!((1..=100).contains(&state.creators()[0].video_ids.len()));
    }

    #[test]
    fn empty_platform_is_rejected() {
        let config = GeneratorConfig {
            n_creators: 0,
            ..GeneratorConfig::default()
        };
        assert_eq!(generate_platform(&config), Err(PlatformError::EmptyPlatform));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut c = GeneratorConfig::default();
        c.privileged_fraction = 1.0;
        assert!(c.validate().is_err());
        let mut c = GeneratorConfig::default();
        c.rate_regular = c.rate_privileged;
        assert!(c.validate().is_err());
        let mut c = GeneratorConfig::default();
        c.video_count_law = VideoCountLaw::Exponential {
            mean: 3.0,
            min: 0,
            max: 100,
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_platform(&GeneratorConfig::with_seed(42)).unwrap();
        let b = generate_platform(&GeneratorConfig::with_seed(42)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let c = generate_platform(&GeneratorConfig::with_seed(43)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn privileged_sets_are_nested_across_fractions() {
        let small = generate_platform(&GeneratorConfig {
            privileged_fraction: 0.1,
            ..GeneratorConfig::with_seed(5)
        })
        .unwrap();
        let large = generate_platform(&GeneratorConfig {
            privileged_fraction: 0.5,
            ..GeneratorConfig::with_seed(5)
        })
        .unwrap();
        for id in small.privileged_ids() {
            assert!(large.creator(id).unwrap().privileged);
        }
    }

    #[test]
    fn popularity_and_earnings_by_definition() {
        let state = tiny(&[&[10, 20], &[0]], &[false, false]);
        assert_eq!(state.true_popularity(CreatorId(0)).unwrap(), 30);
        assert_eq!(state.true_popularity(CreatorId(1)).unwrap(), 0);
        assert_eq!(state.true_earnings(CreatorId(1)).unwrap(), Micros::ZERO);
        assert_eq!(
            state.true_popularity(CreatorId(9)),
            Err(PlatformError::UnknownCreator(CreatorId(9)))
        );
    }

    #[test]
    fn privileged_single_video_earns_ten_dollars() {
        let state = tiny(&[&[100]], &[true]);
        assert_eq!(
            state.true_earnings(CreatorId(0)).unwrap(),
            Micros::from_dollars_exact(10)
        );
    }

    #[test]
    fn parity_edge_cases() {
        // Single inverted pair: p=(1,2), e=(2,1) is not reachable with one
        // rate per creator unless the more popular one is regular.
        let state = tiny(&[&[1], &[2]], &[true, false]);
        let est = state.true_parity().unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(est.pairs_used, 1);

        let same_rate = tiny(&[&[1], &[5], &[3, 4]], &[false, false, false]);
        assert_eq!(same_rate.true_parity().unwrap().value, 1.0);

        let flat = tiny(&[&[4], &[4]], &[false, true]);
        assert!(flat.true_parity().is_err());
    }

    #[test]
    fn json_round_trip_and_validation() {
        let state = generate_platform(&GeneratorConfig {
            n_creators: 20,
            ..GeneratorConfig::with_seed(1)
        })
        .unwrap();
        let json = state.to_json().unwrap();
        assert!(json.contains("\"format_version\":1"));
        assert_eq!(PlatformState::from_json(&json).unwrap(), state);

        let mut doc: PlatformDocument = state.clone().into();
        doc.videos[0].rate = Micros(doc.videos[0].rate.0 + 1);
        assert!(PlatformState::try_from(doc).is_err());

        let mut doc: PlatformDocument = state.into();
        doc.format_version = 99;
        assert!(PlatformState::try_from(doc).is_err());
    }

    #[test]
    fn law_descriptor_round_trip() {
        let law: VideoCountLaw = "exponential:mean=3".parse().unwrap();
        assert_eq!(
            law,
            VideoCountLaw::Exponential {
                mean: 3.0,
                min: 1,
                max: 100
            }
        );
        let default = VideoCountLaw::default();
        assert_eq!(default.to_string().parse::<VideoCountLaw>().unwrap(), default);
        assert!("gaussian".parse::<VideoCountLaw>().is_err());
        assert!("exponential:rate=3".parse::<VideoCountLaw>().is_err());
    }

    #[test]
    fn ceil_share_handles_float_noise() {
        assert_eq!(ceil_share(1000, 1.0 / 3.0), 334);
        assert_eq!(ceil_share(335, 0.2), 67);
        assert_eq!(ceil_share(334, 0.2), 67);
        assert_eq!(ceil_share(10, 0.0), 0);
        assert_eq!(ceil_share(10, 1.0), 10);
    }

    #[test]
    fn money_display() {
        assert_eq!(Micros(10_000).to_string(), "$0.010000");
        assert_eq!(Micros::from_dollars_exact(10).to_string(), "$10.000000");
    }
}
