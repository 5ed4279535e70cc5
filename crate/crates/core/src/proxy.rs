//! Consistency proxies between the API and the scrape interface.
//!
//! A proxy scores how consistent a set of API answers is with a set of
//! scraped videos; a pair is consistent when the score reaches the
//! threshold ζ. The perfect proxy rebuilds each creator's popularity and
//! earnings from its videos, the poor proxy scores every pair identically,
//! and intermediate proxies sit in between.

use std::collections::BTreeMap;
use std::fmt;
use std::io;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::access::{AccessError, Catalog, PlatformAccess};
use crate::estimators::{economic_parity, EstimatorError};
use crate::platform::{CreatorId, Micros, VideoId};
use crate::sources::{ApiAnswer, ScrapAnswer};

#[derive(Debug, Error, PartialEq)]
pub enum ProxyError {
    #[error("cannot reconstruct from an empty scrap set")]
    EmptyScraps,
    #[error("scraps belong to several creators ({0} and {1})")]
    MixedCreators(CreatorId, CreatorId),
    #[error("scraps of creator {scraps} checked against answer for {answer}")]
    CreatorMismatch { answer: CreatorId, scraps: CreatorId },
    #[error("input space must hold at least one element")]
    ZeroInputSpace,
    #[error("threshold ζ must lie in [0, 1], got {0}")]
    InvalidZeta(f64),
    #[error("creator {0} cannot be enumerated on the scrape interface")]
    IncompleteEnumeration(CreatorId),
    #[error("not a two-candidate instance: {0}")]
    NotTwoCandidate(String),
    #[error(transparent)]
    Access(#[from] AccessError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
}

/// Popularity and earnings rebuilt from a creator's scraped videos.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reconstruction {
    pub creator_id: CreatorId,
    pub popularity: u64,
    pub earnings: Micros,
}

impl Reconstruction {
    pub fn as_answer(&self) -> ApiAnswer {
        ApiAnswer {
            creator_id: self.creator_id,
            popularity: self.popularity,
            earnings: self.earnings,
        }
    }
}

/// `p̂ = Σ m`, `ê = Σ m·r` over scraps of a single creator.
pub fn reconstruct(scraps: &[ScrapAnswer]) -> Result<Reconstruction, ProxyError> {
    let first = scraps.first().ok_or(ProxyError::EmptyScraps)?;
    let mut popularity = 0;
    let mut earnings = Micros::ZERO;
    for s in scraps {
        if s.creator_id != first.creator_id {
            return Err(ProxyError::MixedCreators(first.creator_id, s.creator_id));
        }
        popularity += s.views;
        earnings += s.rate.times(s.views);
    }
    Ok(Reconstruction {
        creator_id: first.creator_id,
        popularity,
        earnings,
    })
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InconsistencyFlag {
    pub creator_id: CreatorId,
    pub declared: ApiAnswer,
    pub reconstructed_popularity: u64,
    pub reconstructed_earnings: Micros,
    pub complete: bool,
}

/// Exact consistency check of one API answer against scraps of its creator.
///
/// With every video scraped (`complete`), any difference is a flag. With a
/// subset, the reconstruction is only a lower bound, so only totals that
/// exceed the declaration are flagged.
pub fn check_consistency(
    answer: &ApiAnswer,
    scraps: &[ScrapAnswer],
    complete: bool,
) -> Result<Option<InconsistencyFlag>, ProxyError> {
    let rec = reconstruct(scraps)?;
    if rec.creator_id != answer.creator_id {
        return Err(ProxyError::CreatorMismatch {
            answer: answer.creator_id,
            scraps: rec.creator_id,
        });
    }
    let inconsistent = if complete {
        rec.popularity != answer.popularity || rec.earnings != answer.earnings
    } else {
        rec.earnings > answer.earnings || rec.popularity > answer.popularity
    };
    Ok(inconsistent.then_some(InconsistencyFlag {
        creator_id: answer.creator_id,
        declared: *answer,
        reconstructed_popularity: rec.popularity,
        reconstructed_earnings: rec.earnings,
        complete,
    }))
}

/// Result of checking a set of creators.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub checked_creators: Vec<CreatorId>,
    pub flags: Vec<InconsistencyFlag>,
    pub any_inconsistent: bool,
}

impl ConsistencyReport {
    pub fn record(&mut self, creator: CreatorId, flag: Option<InconsistencyFlag>) {
        self.checked_creators.push(creator);
        if let Some(f) = flag {
            self.flags.push(f);
            self.any_inconsistent = true;
        }
    }

    /// CSV of flags: `creator_id,declared_e,reconstructed_e,complete`, money
    /// in micro-dollars.
    pub fn write_flags_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["creator_id", "declared_e", "reconstructed_e", "complete"])?;
        for f in &self.flags {
            w.write_record([
                f.creator_id.0.to_string(),
                f.declared.earnings.0.to_string(),
                f.reconstructed_earnings.0.to_string(),
                f.complete.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `φ(S_A, S_B) ∈ [0, 1]`.
pub trait ConsistencyScorer: fmt::Debug + Send + Sync {
    /// `complete` tells whether `s_b` holds every video of each creator it
    /// mentions.
    fn score(&self, s_a: &[ApiAnswer], s_b: &[ScrapAnswer], complete: bool) -> f64;
}

fn group_by_creator(s_b: &[ScrapAnswer]) -> BTreeMap<CreatorId, Vec<ScrapAnswer>> {
    let mut groups: BTreeMap<CreatorId, Vec<ScrapAnswer>> = BTreeMap::new();
    for s in s_b {
        groups.entry(s.creator_id).or_default().push(*s);
    }
    groups
}

/// Indicator scorer: 1 when no API answer contradicts the reconstruction
/// from its creator's scraps, 0 otherwise.
#[derive(Copy, Clone, Debug, Default)]
pub struct PerfectScorer;

impl ConsistencyScorer for PerfectScorer {
    fn score(&self, s_a: &[ApiAnswer], s_b: &[ScrapAnswer], complete: bool) -> f64 {
        let groups = group_by_creator(s_b);
        let clean = s_a.iter().all(|a| match groups.get(&a.creator_id) {
            Some(scraps) => matches!(check_consistency(a, scraps, complete), Ok(None)),
            None => true,
        });
        if clean {
            1.0
        } else {
            0.0
        }
    }
}

/// Constant scorer `1/|X_A|`: carries no information about the pair.
#[derive(Copy, Clone, Debug)]
pub struct PoorScorer {
    input_space_size: usize,
}

impl PoorScorer {
    pub fn new(input_space_size: usize) -> Result<Self, ProxyError> {
        if input_space_size == 0 {
            return Err(ProxyError::ZeroInputSpace);
        }
        Ok(PoorScorer { input_space_size })
    }
}

impl ConsistencyScorer for PoorScorer {
    fn score(&self, _: &[ApiAnswer], _: &[ScrapAnswer], _: bool) -> f64 {
        1.0 / self.input_space_size as f64
    }
}

pub fn poor_proxy_score(
    s_a: &[ApiAnswer],
    s_b: &[ScrapAnswer],
    input_space_size: usize,
) -> Result<f64, ProxyError> {
    Ok(PoorScorer::new(input_space_size)?.score(s_a, s_b, true))
}

/// Intermediate scorer that only checks popularity: earnings are left
/// unconstrained, so several API answer sets are consistent with one
/// scrape set.
#[derive(Copy, Clone, Debug, Default)]
pub struct PopularityOnlyScorer;

impl ConsistencyScorer for PopularityOnlyScorer {
    fn score(&self, s_a: &[ApiAnswer], s_b: &[ScrapAnswer], complete: bool) -> f64 {
        let groups = group_by_creator(s_b);
        let clean = s_a.iter().all(|a| match groups.get(&a.creator_id) {
            Some(scraps) => {
                let views: u64 = scraps.iter().map(|s| s.views).sum();
                if complete {
                    views == a.popularity
                } else {
                    views <= a.popularity
                }
            }
            None => true,
        });
        if clean {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProxyKind {
    Perfect,
    Poor,
    Intermediate(String),
}

/// Consistent API sample sets for a given scrape set.
#[derive(Clone, Debug, PartialEq)]
pub enum CandidateSet {
    /// Every API sample set is consistent.
    All,
    /// No API sample set is consistent.
    Empty,
    /// Exactly one: the reconstruction.
    Singleton(Vec<ApiAnswer>),
    /// The scorer is not enumerable.
    Opaque,
}

/// A scorer φ with its threshold ζ.
#[derive(Clone, Debug)]
pub struct ProxySpec {
    scorer: Arc<dyn ConsistencyScorer>,
    zeta: f64,
    kind: ProxyKind,
}

impl ProxySpec {
    /// Indicator proxy with ζ = 0.5.
    pub fn perfect() -> Self {
        ProxySpec {
            scorer: Arc::new(PerfectScorer),
            zeta: 0.5,
            kind: ProxyKind::Perfect,
        }
    }

    pub fn poor(input_space_size: usize, zeta: f64) -> Result<Self, ProxyError> {
        Self::custom(ProxyKind::Poor, Arc::new(PoorScorer::new(input_space_size)?), zeta)
    }

    pub fn intermediate(
        descriptor: impl Into<String>,
        scorer: Arc<dyn ConsistencyScorer>,
        zeta: f64,
    ) -> Result<Self, ProxyError> {
        Self::custom(ProxyKind::Intermediate(descriptor.into()), scorer, zeta)
    }

    fn custom(kind: ProxyKind, scorer: Arc<dyn ConsistencyScorer>, zeta: f64) -> Result<Self, ProxyError> {
        if !(0.0..=1.0).contains(&zeta) {
            return Err(ProxyError::InvalidZeta(zeta));
        }
        Ok(ProxySpec { scorer, zeta, kind })
    }

    pub fn kind(&self) -> &ProxyKind {
        &self.kind
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn score(&self, s_a: &[ApiAnswer], s_b: &[ScrapAnswer], complete: bool) -> f64 {
        self.scorer.score(s_a, s_b, complete).clamp(0.0, 1.0)
    }

    /// ζ-consistency of a sample pair.
    pub fn is_consistent(&self, s_a: &[ApiAnswer], s_b: &[ScrapAnswer], complete: bool) -> bool {
        self.score(s_a, s_b, complete) >= self.zeta
    }

    /// Checks one answer against its creator's scraps through this proxy.
    pub fn inspect(
        &self,
        answer: &ApiAnswer,
        scraps: &[ScrapAnswer],
        complete: bool,
    ) -> Result<Option<InconsistencyFlag>, ProxyError> {
        let rec = reconstruct(scraps)?;
        if rec.creator_id != answer.creator_id {
            return Err(ProxyError::CreatorMismatch {
                answer: answer.creator_id,
                scraps: rec.creator_id,
            });
        }
        if self.is_consistent(std::slice::from_ref(answer), scraps, complete) {
            return Ok(None);
        }
        Ok(Some(InconsistencyFlag {
            creator_id: answer.creator_id,
            declared: *answer,
            reconstructed_popularity: rec.popularity,
            reconstructed_earnings: rec.earnings,
            complete,
        }))
    }

    /// `ψ(S_B)` for a scrape set that covers each mentioned creator fully.
    pub fn candidates(&self, s_b: &[ScrapAnswer]) -> Result<CandidateSet, ProxyError> {
        match self.kind {
            ProxyKind::Perfect => {
                let answers = group_by_creator(s_b)
                    .values()
                    .map(|scraps| reconstruct(scraps).map(|r| r.as_answer()))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(CandidateSet::Singleton(answers))
            }
            ProxyKind::Poor => {
                if self.score(&[], s_b, true) >= self.zeta {
                    Ok(CandidateSet::All)
                } else {
                    Ok(CandidateSet::Empty)
                }
            }
            ProxyKind::Intermediate(_) => Ok(CandidateSet::Opaque),
        }
    }
}

/// Builds API answers for `creators` purely from the scrape interface.
///
/// Every video of every requested creator is scraped; the API is never
/// queried.
pub fn emulate_api(
    access: &mut dyn PlatformAccess,
    catalog: &Catalog,
    creators: &[CreatorId],
) -> Result<Vec<ApiAnswer>, ProxyError> {
    let index: BTreeMap<CreatorId, &[VideoId]> = catalog
        .creators
        .iter()
        .map(|e| (e.creator_id, e.video_ids.as_slice()))
        .collect();
    let mut answers = Vec::with_capacity(creators.len());
    for &creator in creators {
        let videos = index
            .get(&creator)
            .filter(|v| !v.is_empty())
            .ok_or(ProxyError::IncompleteEnumeration(creator))?;
        let scraps = videos
            .iter()
            .map(|&v| access.scrape(v))
            .collect::<Result<Vec<_>, _>>()?;
        let rec = reconstruct(&scraps)?;
        if rec.creator_id != creator {
            return Err(ProxyError::IncompleteEnumeration(creator));
        }
        answers.push(rec.as_answer());
    }
    Ok(answers)
}

/// A scrape set with two API sample sets that the popularity-only proxy
/// cannot tell apart.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoCandidateInstance {
    pub scraps: Vec<ScrapAnswer>,
    pub candidates: [Vec<ApiAnswer>; 2],
}

impl TwoCandidateInstance {
    /// Whether the parity decision is the same on both candidates.
    ///
    /// Errors unless both candidates are consistent with the scraps under
    /// the popularity-only proxy.
    pub fn decisions_agree(&self) -> Result<bool, ProxyError> {
        let proxy = ProxySpec::intermediate("popularity-only", Arc::new(PopularityOnlyScorer), 0.5)?;
        let mut decisions = Vec::with_capacity(2);
        for (i, candidate) in self.candidates.iter().enumerate() {
            if !proxy.is_consistent(candidate, &self.scraps, true) {
                return Err(ProxyError::NotTwoCandidate(format!(
                    "candidate {i} is inconsistent with the scraps"
                )));
            }
            let samples: Vec<_> = candidate.iter().map(ApiAnswer::sample).collect();
            decisions.push(economic_parity(&samples)?.decision);
        }
        if self.candidates[0] == self.candidates[1] {
            return Err(ProxyError::NotTwoCandidate("candidates are identical".into()));
        }
        Ok(decisions[0] == decisions[1])
    }

    fn answers(scraps: &[ScrapAnswer], earnings: &[u64]) -> Vec<ApiAnswer> {
        group_by_creator(scraps)
            .values()
            .zip(earnings)
            .map(|(s, &e)| {
                let rec = reconstruct(s).expect("non-empty group");
                ApiAnswer {
                    creator_id: rec.creator_id,
                    popularity: rec.popularity,
                    earnings: Micros(e),
                }
            })
            .collect()
    }

    fn toy_scraps() -> Vec<ScrapAnswer> {
        let video = |id: u64, creator: u64, views: u64, rate: u64| ScrapAnswer {
            video_id: VideoId(id),
            views,
            rate: Micros(rate),
            creator_id: CreatorId(creator),
        };
        vec![
            video(0, 0, 4, 10_000),
            video(1, 0, 6, 10_000),
            video(2, 1, 20, 100_000),
            video(3, 2, 30, 10_000),
        ]
    }

    /// Both candidates violate parity (2/3 of pairs ordered).
    pub fn toy() -> Self {
        let scraps = Self::toy_scraps();
        TwoCandidateInstance {
            candidates: [
                Self::answers(&scraps, &[100_000, 2_000_000, 300_000]),
                Self::answers(&scraps, &[100_000, 3_000_000, 200_000]),
            ],
            scraps,
        }
    }

    /// Negative control: the second candidate satisfies parity.
    pub fn toy_perturbed() -> Self {
        let scraps = Self::toy_scraps();
        TwoCandidateInstance {
            candidates: [
                Self::answers(&scraps, &[100_000, 2_000_000, 300_000]),
                Self::answers(&scraps, &[100_000, 200_000, 300_000]),
            ],
            scraps,
        }
    }

    /// Random instance whose two candidates have identical parity: the
    /// second candidate's earnings are a strictly increasing transform of
    /// the first's.
    pub fn random(seed: u64, n_creators: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut scraps = Vec::new();
        for c in 0..n_creators.max(2) as u64 {
            let rate = if rng.random_bool(1.0 / 3.0) { 100_000 } else { 10_000 };
            for _ in 0..rng.random_range(1..=4) {
                scraps.push(ScrapAnswer {
                    video_id: VideoId(scraps.len() as u64),
                    views: rng.random_range(0..=1000),
                    rate: Micros(rate),
                    creator_id: CreatorId(c),
                });
            }
        }
        let truth: Vec<u64> = group_by_creator(&scraps)
            .values()
            .map(|s| reconstruct(s).expect("non-empty").earnings.0)
            .collect();
        let (a, b) = (rng.random_range(2..7), rng.random_range(1..1000));
        let transformed: Vec<u64> = truth.iter().map(|e| a * e + b).collect();
        TwoCandidateInstance {
            candidates: [Self::answers(&scraps, &truth), Self::answers(&scraps, &transformed)],
            scraps,
        }
    }
}

/// Builds the built-in instance where the scrape set admits two API sample
/// sets with the same decision, so the API is not needed to decide.
pub fn two_candidate_nonnecessity_demo() -> bool {
    TwoCandidateInstance::toy()
        .decisions_agree()
        .expect("toy instance is a valid two-candidate instance")
}
