//! Audit runs: budgeted two-armed audits, manipulation sweeps and Pareto
//! sweeps.

mod budget;
mod pareto;
mod sweep;

pub use budget::{
    detect_probability, full_scrape_audit, run_budgeted_audit, AuditError, AuditResult, BudgetPlan,
    EstimatorSource, QueryLedger,
};
pub use pareto::{dominates, mark_frontier, pareto_sweep, ParetoConfig, ParetoPoint, ParetoSweep, RunOutcome};
pub use sweep::{manipulation_sweep, Band, PlatformSource, SweepConfig, SweepCurve, SweepRow};

use thiserror::Error;

use crate::estimators::EstimatorError;
use crate::platform::PlatformError;
use crate::proxy::ProxyError;
use crate::sources::SourceError;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("sweep grid and run count must be nonempty")]
    EmptyGrid,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Audit(#[from] AuditError),
    #[error(transparent)]
    Platform(#[from] PlatformError),
    #[error(transparent)]
    Source(#[from] SourceError),
    #[error(transparent)]
    Proxy(#[from] ProxyError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
}

/// Linear-interpolation quantile of `values` (need not be sorted).
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}
