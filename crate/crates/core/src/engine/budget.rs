//! Budgeted audits: the two-armed split between estimation-only API
//! queries and API+scrape consistency bundles, and the full-scrape regime.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::access::{AccessError, PlatformAccess};
use crate::estimators::{economic_parity, AccuracyBudget, ErrorModel, EstimatorError, ParityEstimate};
use crate::proxy::{reconstruct, ConsistencyReport, ProxyError, ProxySpec};
use crate::sources::{ApiAnswer, ScrapAnswer};

#[derive(Debug, Error, PartialEq)]
pub enum AuditError {
    #[error("budget of {t} queries is below the t_A regime: no API sample can be afforded")]
    BudgetBelowTaRegime { t: u64 },
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("full-scrape audit needs {needed} queries, budget is {available}")]
    InsufficientBudget { needed: u64, available: u64 },
    #[error("audit aborted after spending {} queries: {cause}", .ledger.spent())]
    Aborted { ledger: QueryLedger, cause: AccessError },
    #[error(transparent)]
    Proxy(#[from] ProxyError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
}

fn default_recheck() -> bool {
    true
}

/// How a total budget `t` is split: `round(t·β)` queries for arm 1, the
/// rest for arm 2.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetPlan {
    pub t: u64,
    pub beta: f64,
    pub seed: u64,
    /// Once every creator has been queried, arm 2 may re-check arm-1
    /// creators with their cached API answer.
    #[serde(default = "default_recheck")]
    pub recheck_arm1: bool,
    #[serde(default)]
    pub error_model: ErrorModel,
}

impl BudgetPlan {
    pub fn new(t: u64, beta: f64, seed: u64) -> Self {
        BudgetPlan {
            t,
            beta,
            seed,
            recheck_arm1: true,
            error_model: ErrorModel::default(),
        }
    }

    pub fn arm1_budget(&self) -> u64 {
        (self.t as f64 * self.beta).round() as u64
    }

    pub fn arm2_budget(&self) -> u64 {
        self.t - self.arm1_budget()
    }
}

/// Queries spent against a budget.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLedger {
    pub budget: u64,
    pub spent_a: u64,
    pub spent_b: u64,
}

impl QueryLedger {
    pub fn spent(&self) -> u64 {
        self.spent_a + self.spent_b
    }

    pub fn remaining(&self) -> u64 {
        self.budget.saturating_sub(self.spent())
    }
}

/// Which data the parity estimate was computed on.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorSource {
    Api,
    Scrape,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditResult {
    /// `None` when the gathered samples hold no pair of distinct
    /// popularities.
    pub parity: Option<ParityEstimate>,
    pub accuracy: AccuracyBudget,
    pub consistency: ConsistencyReport,
    pub arm1_pulls: u64,
    pub arm2_pulls: u64,
    /// Arm-2 checks of creators already queried by arm 1.
    pub rechecks: u64,
    pub ledger: QueryLedger,
    pub estimator_source: EstimatorSource,
}

impl AuditResult {
    pub fn t_a(&self) -> u64 {
        self.accuracy.t_a
    }

    pub fn detected(&self) -> bool {
        self.consistency.any_inconsistent
    }
}

/// Runs one two-armed audit.
///
/// Arm 1 queries the API for `round(t·β)` distinct creators drawn
/// uniformly. Arm 2 walks the remaining creators in random order; each
/// pull queries the API once and scrapes every video of that creator, then
/// checks consistency with complete coverage. Arm 2 stops as soon as the
/// next pull is unaffordable. Parity is estimated on every API answer of
/// both arms.
pub fn run_budgeted_audit(
    access: &mut dyn PlatformAccess,
    plan: &BudgetPlan,
    proxy: &ProxySpec,
) -> Result<AuditResult, AuditError> {
    if plan.t == 0 {
        return Err(AuditError::BudgetBelowTaRegime { t: 0 });
    }
    if !(0.0..=1.0).contains(&plan.beta) {
        return Err(AuditError::InvalidPlan(format!("beta {} outside [0, 1]", plan.beta)));
    }
    let mut ledger = QueryLedger {
        budget: plan.t,
        ..QueryLedger::default()
    };
    let catalog = access
        .catalog()
        .map_err(|cause| AuditError::Aborted { ledger, cause })?;
    let n = catalog.n_creators();

    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);

    let arm1_n = (plan.arm1_budget() as usize).min(n);
    let mut answers: Vec<ApiAnswer> = Vec::with_capacity(arm1_n);
    let mut cached: Vec<Option<usize>> = vec![None; n];
    for &pos in &order[..arm1_n] {
        let answer = access
            .api(catalog.creators[pos].creator_id)
            .map_err(|cause| AuditError::Aborted { ledger, cause })?;
        ledger.spent_a += 1;
        cached[pos] = Some(answers.len());
        answers.push(answer);
    }

    let mut arm2_left = plan.arm2_budget();
    let mut consistency = ConsistencyReport::default();
    let (mut arm2_pulls, mut rechecks) = (0u64, 0u64);
    let rechecked = if plan.recheck_arm1 { &order[..arm1_n] } else { &[][..] };
    for &pos in order[arm1_n..].iter().chain(rechecked) {
        let entry = &catalog.creators[pos];
        let fresh = cached[pos].is_none();
        let cost = entry.video_ids.len() as u64 + u64::from(fresh);
        if cost > arm2_left {
            break;
        }
        let answer = match cached[pos] {
            Some(i) => answers[i],
            None => {
                let a = access
                    .api(entry.creator_id)
                    .map_err(|cause| AuditError::Aborted { ledger, cause })?;
                ledger.spent_a += 1;
                a
            }
        };
        let mut scraps: Vec<ScrapAnswer> = Vec::with_capacity(entry.video_ids.len());
        for &video in &entry.video_ids {
            let s = access
                .scrape(video)
                .map_err(|cause| AuditError::Aborted { ledger, cause })?;
            ledger.spent_b += 1;
            scraps.push(s);
        }
        arm2_left -= cost;
        consistency.record(entry.creator_id, proxy.inspect(&answer, &scraps, true)?);
        if fresh {
            cached[pos] = Some(answers.len());
            answers.push(answer);
            arm2_pulls += 1;
        } else {
            rechecks += 1;
        }
    }

    let t_a = answers.len() as u64;
    if t_a == 0 {
        return Err(AuditError::BudgetBelowTaRegime { t: plan.t });
    }
    let samples: Vec<_> = answers.iter().map(ApiAnswer::sample).collect();
    Ok(AuditResult {
        parity: economic_parity(&samples).ok(),
        accuracy: plan.error_model.accuracy(t_a)?,
        consistency,
        arm1_pulls: arm1_n as u64,
        arm2_pulls,
        rechecks,
        ledger,
        estimator_source: EstimatorSource::Api,
    })
}

/// Audit with a budget covering every creator and every video.
///
/// Parity is estimated on answers emulated from the scrape interface
/// alone; the API only serves to check consistency.
pub fn full_scrape_audit(
    access: &mut dyn PlatformAccess,
    proxy: &ProxySpec,
    budget: u64,
) -> Result<AuditResult, AuditError> {
    let mut ledger = QueryLedger {
        budget,
        ..QueryLedger::default()
    };
    let catalog = access
        .catalog()
        .map_err(|cause| AuditError::Aborted { ledger, cause })?;
    let needed = (catalog.n_creators() + catalog.n_videos()) as u64;
    if budget < needed {
        return Err(AuditError::InsufficientBudget {
            needed,
            available: budget,
        });
    }

    let mut emulated = Vec::with_capacity(catalog.n_creators());
    let mut consistency = ConsistencyReport::default();
    for entry in &catalog.creators {
        let mut scraps = Vec::with_capacity(entry.video_ids.len());
        for &video in &entry.video_ids {
            let s = access
                .scrape(video)
                .map_err(|cause| AuditError::Aborted { ledger, cause })?;
            ledger.spent_b += 1;
            scraps.push(s);
        }
        let rec = reconstruct(&scraps)?;
        let answer = access
            .api(entry.creator_id)
            .map_err(|cause| AuditError::Aborted { ledger, cause })?;
        ledger.spent_a += 1;
        consistency.record(entry.creator_id, proxy.inspect(&answer, &scraps, true)?);
        emulated.push(rec.as_answer());
    }

    let t_a = emulated.len() as u64;
    let samples: Vec<_> = emulated.iter().map(ApiAnswer::sample).collect();
    Ok(AuditResult {
        parity: Some(economic_parity(&samples)?),
        accuracy: ErrorModel::default().accuracy(t_a.max(1))?,
        consistency,
        arm1_pulls: 0,
        arm2_pulls: t_a,
        rechecks: 0,
        ledger,
        estimator_source: EstimatorSource::Scrape,
    })
}

/// Probability that `n` creators drawn without replacement among `total`
/// include at least one of the `manipulated` ones:
/// `1 − C(total−manipulated, n) / C(total, n)`.
pub fn detect_probability(total: u64, manipulated: u64, n: u64) -> Result<f64, AuditError> {
    if manipulated > total || n > total {
        return Err(AuditError::InvalidPlan(format!(
            "need manipulated ≤ total and n ≤ total (total={total}, manipulated={manipulated}, n={n})"
        )));
    }
    let clean = total - manipulated;
    if n > clean {
        return Ok(1.0);
    }
    let mut miss = 1.0_f64;
    for i in 0..n {
        miss *= (clean - i) as f64 / (total - i) as f64;
    }
    Ok(1.0 - miss)
}
