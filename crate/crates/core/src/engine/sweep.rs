//! Manipulation sweeps: parity seen through the manipulated API versus
//! parity emulated from the honest scrape interface, as the manipulated
//! share `x` grows.

use std::io;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::access::{Catalog, LocalAccess};
use crate::estimators::{economic_parity, PARITY_THRESHOLD};
use crate::platform::{generate_platform, GeneratorConfig, PlatformState};
use crate::proxy::emulate_api;
use crate::seeds::{derive_seed, Stream};
use crate::sources::{ApiAnswer, ManipulatedApi, ManipulationStrategy, StrategyKind};

use super::{quantile, EngineError};

/// Where each run's platform comes from.
#[derive(Clone, Debug)]
pub enum PlatformSource {
    /// One fixed platform for every run; only the manipulation draw varies.
    Fixed(Arc<PlatformState>),
    /// A fresh platform per run, seeded from the sweep seed.
    Generated(GeneratorConfig),
}

impl PlatformSource {
    fn platform_for_run(&self, seed: u64, run: u64) -> Result<Arc<PlatformState>, EngineError> {
        match self {
            PlatformSource::Fixed(state) => Ok(state.clone()),
            PlatformSource::Generated(config) => {
                let config = GeneratorConfig {
                    seed: derive_seed(seed, Stream::Platform, run),
                    ..config.clone()
                };
                Ok(Arc::new(generate_platform(&config)?))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub strategy: StrategyKind,
    pub x: f64,
    pub run: u64,
    pub parity_a: f64,
    pub parity_b: f64,
    /// Share of all API answers whose earnings differ from the truth.
    pub answers_manipulated: f64,
}

/// Median with the (0.1, 0.9) quantile band over runs.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub median: f64,
    pub q10: f64,
    pub q90: f64,
}

impl Band {
    fn of(values: &[f64]) -> Band {
        Band {
            median: quantile(values, 0.5),
            q10: quantile(values, 0.1),
            q90: quantile(values, 0.9),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCurve {
    pub strategy: StrategyKind,
    pub xs: Vec<f64>,
    pub curve_a: Vec<Band>,
    pub curve_b: Vec<Band>,
    /// First `x` whose median API parity exceeds the threshold.
    pub x_star: Option<f64>,
    pub rows: Vec<SweepRow>,
}

impl SweepCurve {
    /// Per-run API parity values, one vector per run in `xs` order.
    pub fn runs_a(&self) -> Vec<Vec<f64>> {
        self.per_run(|r| r.parity_a)
    }

    pub fn runs_b(&self) -> Vec<Vec<f64>> {
        self.per_run(|r| r.parity_b)
    }

    fn per_run(&self, f: impl Fn(&SweepRow) -> f64) -> Vec<Vec<f64>> {
        let runs = self.rows.iter().map(|r| r.run).max().map_or(0, |m| m + 1) as usize;
        let mut out = vec![Vec::with_capacity(self.xs.len()); runs];
        for row in &self.rows {
            out[row.run as usize].push(f(row));
        }
        out
    }

    /// `strategy,x,run,parity_A,parity_B,answers_manipulated`.
    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["strategy", "x", "run", "parity_A", "parity_B", "answers_manipulated"])?;
        for r in &self.rows {
            w.write_record([
                r.strategy.name().to_string(),
                r.x.to_string(),
                r.run.to_string(),
                r.parity_a.to_string(),
                r.parity_b.to_string(),
                r.answers_manipulated.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// `{"strategy": ..., "x_star": ...}`.
    pub fn threshold_report(&self) -> serde_json::Value {
        serde_json::json!({ "strategy": self.strategy.name(), "x_star": self.x_star })
    }
}

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub platform: PlatformSource,
    pub strategy: StrategyKind,
    pub xs: Vec<f64>,
    pub runs: usize,
    pub seed: u64,
}

fn parity_of(answers: &[ApiAnswer]) -> Result<f64, EngineError> {
    let samples: Vec<_> = answers.iter().map(ApiAnswer::sample).collect();
    Ok(economic_parity(&samples)?.value)
}

fn sweep_run(config: &SweepConfig, run: u64) -> Result<Vec<SweepRow>, EngineError> {
    let state = config.platform.platform_for_run(config.seed, run)?;
    let catalog = Catalog::of(&state);
    let ids: Vec<_> = state.creators().iter().map(|c| c.id).collect();
    let strategy_seed = derive_seed(config.seed, Stream::Strategy, run);
    config
        .xs
        .iter()
        .map(|&x| {
            let strategy = ManipulationStrategy::new(config.strategy, x, strategy_seed)?;
            let api = Arc::new(ManipulatedApi::new(state.clone(), strategy)?);
            let parity_a = parity_of(&api.all_answers())?;
            let mut scrape = LocalAccess::new(api.clone());
            let parity_b = parity_of(&emulate_api(&mut scrape, &catalog, &ids)?)?;
            Ok(SweepRow {
                strategy: config.strategy,
                x,
                run,
                parity_a,
                parity_b,
                answers_manipulated: api.manipulated_creators().len() as f64 / ids.len() as f64,
            })
        })
        .collect()
}

/// Parity through the manipulated API and through the emulated API for
/// every `x` and run. Full budget: every creator and video is queried.
pub fn manipulation_sweep(config: &SweepConfig) -> Result<SweepCurve, EngineError> {
    if config.xs.is_empty() || config.runs == 0 {
        return Err(EngineError::EmptyGrid);
    }
    if let Some(&x) = config.xs.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(EngineError::InvalidGrid(format!("x = {x} outside [0, 1]")));
    }
    let per_run: Vec<Vec<SweepRow>> = (0..config.runs as u64)
        .into_par_iter()
        .map(|run| sweep_run(config, run))
        .collect::<Result<_, _>>()?;

    let mut curve_a = Vec::with_capacity(config.xs.len());
    let mut curve_b = Vec::with_capacity(config.xs.len());
    for i in 0..config.xs.len() {
        let a: Vec<f64> = per_run.iter().map(|rows| rows[i].parity_a).collect();
        let b: Vec<f64> = per_run.iter().map(|rows| rows[i].parity_b).collect();
        curve_a.push(Band::of(&a));
        curve_b.push(Band::of(&b));
    }
    let x_star = config
        .xs
        .iter()
        .zip(&curve_a)
        .find(|(_, band)| band.median > PARITY_THRESHOLD)
        .map(|(&x, _)| x);

    Ok(SweepCurve {
        strategy: config.strategy,
        xs: config.xs.clone(),
        curve_a,
        curve_b,
        x_star,
        rows: per_run.into_iter().flatten().collect(),
    })
}
