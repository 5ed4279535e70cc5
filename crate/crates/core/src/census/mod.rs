//! Disparate impact audit of an income classifier, using either the true
//! sex of each row or a proxy for it.

mod attribute;
mod data;
mod logistic;

pub use attribute::{AttributeProxy, NameTable};
pub use data::{
    ingest_census_csv, ingest_census_reader, synthetic_census, CensusRow, CensusSchema, IngestOptions, IngestReport,
    Sex, TabularDataset, FEATURE_NAMES,
};
pub use logistic::{train_logistic, LogisticModel, Standardizer, TrainParams};

use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimators::{disparate_impact, DiOrientation, DisparateImpactEstimate, EstimatorError};

#[derive(Debug, Error)]
pub enum CensusError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("no data rows")]
    EmptyInput,
    #[error("unrecognised census schema: {0}")]
    UnknownSchema(String),
    #[error("{dropped} of {raw} rows malformed")]
    TooManyMalformed { dropped: usize, raw: usize },
    #[error("training data has a single class")]
    SingleClass,
    #[error("row has no `{0}`")]
    MissingField(&'static str),
    #[error("name `{0}` not in the name table")]
    UnknownName(String),
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("name table gives no weight to {0:?}")]
    NoNameFor(Sex),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
}

/// Women are the protected group. The census audit reports
/// `P(Y=1 | women) / P(Y=1 | men)`, so a biased model lands below 0.8.
pub const CENSUS_ORIENTATION: DiOrientation = DiOrientation::Swapped;

/// Which sex the auditor feeds to the model and groups by.
#[derive(Copy, Clone, Debug)]
pub enum SexChannel<'a> {
    /// The recorded sex.
    Truth,
    /// A proxy's guess, used both as model input and for grouping.
    Proxy(&'a AttributeProxy),
}

pub fn audit_di(
    model: &LogisticModel,
    data: &TabularDataset,
    channel: SexChannel<'_>,
    orientation: DiOrientation,
) -> Result<DisparateImpactEstimate, CensusError> {
    let sexes = match channel {
        SexChannel::Truth => data.rows.iter().map(|r| r.sex).collect(),
        SexChannel::Proxy(proxy) => proxy.proxy_all(data)?,
    };
    let samples: Vec<(bool, bool)> = data
        .rows
        .iter()
        .zip(sexes)
        .map(|(r, s)| (s == Sex::Female, model.predict(&r.features, s)))
        .collect();
    Ok(disparate_impact(&samples, orientation)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CensusAuditReport {
    pub truth: DisparateImpactEstimate,
    pub proxied: DisparateImpactEstimate,
    /// `|DI_proxy - DI_truth| / DI_truth`.
    pub relative_error: f64,
    pub proxy_agreement: f64,
    pub proxy_error_rate: f64,
    pub seed: u64,
}

impl CensusAuditReport {
    /// `channel,di,violation,proxy_error_rate,seed`.
    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["channel", "di", "violation", "proxy_error_rate", "seed"])?;
        for (channel, est, rate) in [("A", &self.truth, 0.0), ("B", &self.proxied, self.proxy_error_rate)] {
            w.write_record([
                channel.to_string(),
                est.di.to_string(),
                est.violation.to_string(),
                rate.to_string(),
                self.seed.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// DI with the true sex and with the proxy, on the same model and rows.
pub fn run_census_audit(
    model: &LogisticModel,
    data: &TabularDataset,
    proxy: &AttributeProxy,
    seed: u64,
) -> Result<CensusAuditReport, CensusError> {
    let truth = audit_di(model, data, SexChannel::Truth, CENSUS_ORIENTATION)?;
    let proxied = audit_di(model, data, SexChannel::Proxy(proxy), CENSUS_ORIENTATION)?;
    let agreement = proxy.agreement(data)?;
    Ok(CensusAuditReport {
        relative_error: (proxied.di - truth.di).abs() / truth.di,
        truth,
        proxied,
        proxy_agreement: agreement,
        proxy_error_rate: 1.0 - agreement,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fitted(bias: f64) -> (LogisticModel, TabularDataset) {
        let train = synthetic_census(4000, bias, 1);
        let test = synthetic_census(3000, bias, 2);
        (train_logistic(&train, &TrainParams::default(), 3).unwrap(), test)
    }

    #[test]
    fn exact_proxy_matches_truth_row_for_row() {
        let (model, test) = fitted(1.5);
        let report = run_census_audit(&model, &test, &AttributeProxy::noisy(0.0, 1).unwrap(), 1).unwrap();
        assert_eq!(report.truth, report.proxied);
        assert_eq!(report.relative_error, 0.0);
        assert!(report.truth.violation, "{}", report.truth.di);
    }

    #[test]
    fn shuffled_predictions_show_no_disparity() {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;

        let (model, test) = fitted(1.5);
        let female: Vec<bool> = test.rows.iter().map(|r| r.sex == Sex::Female).collect();
        let mut preds: Vec<bool> = test.rows.iter().map(|r| model.predict(&r.features, r.sex)).collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let (mut sum, mut violations) = (0.0, 0);
        for _ in 0..200 {
            preds.shuffle(&mut rng);
            let samples: Vec<_> = female.iter().copied().zip(preds.iter().copied()).collect();
            let est = disparate_impact(&samples, CENSUS_ORIENTATION).unwrap();
            sum += est.di;
            violations += usize::from(est.violation);
        }
        // Per-shuffle standard error is about 0.07 here.
        assert!((sum / 200.0 - 1.0).abs() < 0.03, "{}", sum / 200.0);
        assert!(violations <= 4, "{violations}");
    }

    #[test]
    fn noisy_proxy_pulls_di_toward_parity() {
        let (model, test) = fitted(1.5);
        let report = run_census_audit(&model, &test, &AttributeProxy::noisy(0.3, 7).unwrap(), 7).unwrap();
        assert!((report.proxied.di - 1.0).abs() < (report.truth.di - 1.0).abs());
        assert!((report.proxy_error_rate - 0.3).abs() < 0.03);
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("channel,di,violation,proxy_error_rate,seed\nA,"));
        assert_eq!(text.lines().count(), 3);
    }
}
