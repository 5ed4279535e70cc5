//! β sweeps of the two-armed audit and their Pareto frontier between the
//! estimator's margin error and the probability of catching manipulation.

use std::io;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::access::LocalAccess;
use crate::proxy::ProxySpec;
use crate::seeds::{derive_seed, Stream};
use crate::sources::ManipulatedApi;

use super::budget::{run_budgeted_audit, BudgetPlan};
use super::{quantile, EngineError};

/// Outcome of one audit run inside a sweep.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub epsilon: f64,
    pub detected: bool,
    pub t_a: u64,
    pub arm2_pulls: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub beta: f64,
    pub epsilon_mean: f64,
    pub p_detect: f64,
    pub runs: usize,
    /// 0.1 and 0.9 quantiles of the per-run margin error.
    pub q10: f64,
    pub q90: f64,
    pub on_frontier: bool,
    #[serde(skip)]
    pub outcomes: Vec<RunOutcome>,
}

impl ParetoPoint {
    pub fn mean_arm2_pulls(&self) -> f64 {
        self.outcomes.iter().map(|o| o.arm2_pulls as f64).sum::<f64>() / self.runs.max(1) as f64
    }
}

#[derive(Clone, Debug)]
pub struct ParetoConfig {
    pub api: Arc<ManipulatedApi>,
    pub proxy: ProxySpec,
    pub t: u64,
    pub betas: Vec<f64>,
    pub runs: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParetoSweep {
    pub points: Vec<ParetoPoint>,
}

impl ParetoSweep {
    pub fn frontier(&self) -> impl Iterator<Item = &ParetoPoint> {
        self.points.iter().filter(|p| p.on_frontier)
    }

    /// `beta,epsilon_mean,p_detect,runs,q10,q90,on_frontier`.
    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["beta", "epsilon_mean", "p_detect", "runs", "q10", "q90", "on_frontier"])?;
        for p in &self.points {
            w.write_record([
                p.beta.to_string(),
                p.epsilon_mean.to_string(),
                p.p_detect.to_string(),
                p.runs.to_string(),
                p.q10.to_string(),
                p.q90.to_string(),
                p.on_frontier.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `a` dominates `b` when it is no worse on both axes (lower ε, higher
/// detection) and strictly better on one.
pub fn dominates(a: &ParetoPoint, b: &ParetoPoint) -> bool {
    a.epsilon_mean <= b.epsilon_mean
        && a.p_detect >= b.p_detect
        && (a.epsilon_mean < b.epsilon_mean || a.p_detect > b.p_detect)
}

/// Marks every non-dominated point.
pub fn mark_frontier(points: &mut [ParetoPoint]) {
    let dominated: Vec<bool> = (0..points.len())
        .map(|i| points.iter().any(|other| dominates(other, &points[i])))
        .collect();
    for (p, d) in points.iter_mut().zip(dominated) {
        p.on_frontier = !d;
    }
}

/// For each β, `runs` audits with seeds shared across β values.
pub fn pareto_sweep(config: &ParetoConfig) -> Result<ParetoSweep, EngineError> {
    if config.betas.is_empty() || config.runs == 0 {
        return Err(EngineError::EmptyGrid);
    }
    if let Some(&b) = config.betas.iter().find(|b| !(0.0..=1.0).contains(*b)) {
        return Err(EngineError::InvalidGrid(format!("beta = {b} outside [0, 1]")));
    }
    let mut points = config
        .betas
        .iter()
        .map(|&beta| {
            let outcomes: Vec<RunOutcome> = (0..config.runs as u64)
                .into_par_iter()
                .map(|run| {
                    let plan = BudgetPlan::new(config.t, beta, derive_seed(config.seed, Stream::Audit, run));
                    let mut access = LocalAccess::new(config.api.clone());
                    let r = run_budgeted_audit(&mut access, &plan, &config.proxy)?;
                    Ok(RunOutcome {
                        epsilon: r.accuracy.epsilon,
                        detected: r.detected(),
                        t_a: r.t_a(),
                        arm2_pulls: r.arm2_pulls,
                    })
                })
                .collect::<Result<_, EngineError>>()?;
            let eps: Vec<f64> = outcomes.iter().map(|o| o.epsilon).collect();
            let runs = outcomes.len();
            Ok(ParetoPoint {
                beta,
                epsilon_mean: eps.iter().sum::<f64>() / runs as f64,
                p_detect: outcomes.iter().filter(|o| o.detected).count() as f64 / runs as f64,
                runs,
                q10: quantile(&eps, 0.1),
                q90: quantile(&eps, 0.9),
                on_frontier: false,
                outcomes,
            })
        })
        .collect::<Result<Vec<_>, EngineError>>()?;
    mark_frontier(&mut points);
    Ok(ParetoSweep { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::platform::{generate_platform, GeneratorConfig};
    use crate::sources::{ManipulationStrategy, StrategyKind};

    fn point(eps: f64, p: f64) -> ParetoPoint {
        ParetoPoint {
            beta: 0.0,
            epsilon_mean: eps,
            p_detect: p,
            runs: 1,
            q10: eps,
            q90: eps,
            on_frontier: false,
            outcomes: vec![],
        }
    }

    #[test]
    fn frontier_marks_non_dominated_points() {
        let mut pts = vec![point(0.1, 0.5), point(0.2, 0.9), point(0.2, 0.4), point(0.1, 0.5)];
        mark_frontier(&mut pts);
        let marks: Vec<bool> = pts.iter().map(|p| p.on_frontier).collect();
        assert_eq!(marks, [true, true, false, true]);
    }

    fn config(strategy: ManipulationStrategy) -> ParetoConfig {
        let state = Arc::new(generate_platform(&GeneratorConfig::with_seed(3)).unwrap());
        ParetoConfig {
            api: Arc::new(ManipulatedApi::new(state, strategy).unwrap()),
            proxy: ProxySpec::perfect(),
            t: 200,
            betas: (0..=10).map(|i| i as f64 / 10.0).collect(),
            runs: 30,
            seed: 9,
        }
    }

    #[test]
    fn honest_platform_collapses_frontier() {
        let sweep = pareto_sweep(&config(ManipulationStrategy::honest())).unwrap();
        assert!(sweep.points.iter().all(|p| p.p_detect == 0.0));
        let frontier: Vec<f64> = sweep.frontier().map(|p| p.beta).collect();
        assert_eq!(frontier, [1.0]);
    }

    #[test]
    fn detection_trades_against_error() {
        let s = ManipulationStrategy::new(StrategyKind::DemotePrivileged, 0.2, 1).unwrap();
        let sweep = pareto_sweep(&config(s)).unwrap();
        let first = &sweep.points[0];
        let last = sweep.points.last().unwrap();
        assert!(first.p_detect > last.p_detect);
        assert!(first.epsilon_mean > last.epsilon_mean);
        assert_eq!(last.p_detect, 0.0);
        let mut csv = Vec::new();
        sweep.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 12);
    }
}
