//! Logistic regression on the five standardized features plus sex, fitted
//! by full-batch gradient descent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::data::{Sex, TabularDataset};
use super::CensusError;

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            learning_rate: 0.5,
            epochs: 300,
            l2: 0.0,
        }
    }
}

/// Per-feature mean and standard deviation of the training rows.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: [f64; 5],
    pub std: [f64; 5],
}

impl Standardizer {
    fn fit(data: &TabularDataset) -> Self {
        let n = data.len() as f64;
        let mut mean = [0.0; 5];
        for row in &data.rows {
            for (m, x) in mean.iter_mut().zip(row.features) {
                *m += x / n;
            }
        }
        let mut std = [0.0; 5];
        for row in &data.rows {
            for ((s, x), m) in std.iter_mut().zip(row.features).zip(mean) {
                *s += (x - m).powi(2) / n;
            }
        }
        for s in &mut std {
            *s = if *s > 0.0 { s.sqrt() } else { 1.0 };
        }
        Standardizer { mean, std }
    }

    fn apply(&self, features: &[f64; 5], sex: Sex) -> [f64; 6] {
        let mut x = [0.0; 6];
        for i in 0..5 {
            x[i] = (features[i] - self.mean[i]) / self.std[i];
        }
        x[5] = sex.as_feature();
        x
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    /// Five standardized features, then sex (male = 1).
    pub weights: [f64; 6],
    pub intercept: f64,
    pub standardizer: Standardizer,
    pub params: TrainParams,
    pub seed: u64,
    pub training_accuracy: f64,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl LogisticModel {
    pub fn probability(&self, features: &[f64; 5], sex: Sex) -> f64 {
        let x = self.standardizer.apply(features, sex);
        sigmoid(self.intercept + x.iter().zip(self.weights).map(|(a, w)| a * w).sum::<f64>())
    }

    pub fn predict(&self, features: &[f64; 5], sex: Sex) -> bool {
        self.probability(features, sex) >= 0.5
    }
}

/// Fits the model on labelled rows. Deterministic in `(data, params, seed)`.
pub fn train_logistic(
    data: &TabularDataset,
    params: &TrainParams,
    seed: u64,
) -> Result<LogisticModel, CensusError> {
    let labelled: Vec<_> = data
        .rows
        .iter()
        .map(|r| r.label.map(|y| (r, y)).ok_or(CensusError::MissingField("label")))
        .collect::<Result<_, _>>()?;
    let positives = labelled.iter().filter(|(_, y)| *y).count();
    if positives == 0 || positives == labelled.len() {
        return Err(CensusError::SingleClass);
    }

    let standardizer = Standardizer::fit(data);
    let xs: Vec<([f64; 6], f64)> = labelled
        .iter()
        .map(|(r, y)| (standardizer.apply(&r.features, r.sex), f64::from(u8::from(*y))))
        .collect();
    let n = xs.len() as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = [0.0; 6];
    for w in &mut weights {
        *w = rng.random_range(-0.01..0.01);
    }
    let mut intercept = 0.0;
    for _ in 0..params.epochs {
        let mut grad = [0.0; 6];
        let mut grad_b = 0.0;
        for (x, y) in &xs {
            let z = intercept + x.iter().zip(weights).map(|(a, w)| a * w).sum::<f64>();
            let err = sigmoid(z) - y;
            for (g, a) in grad.iter_mut().zip(x) {
                *g += err * a;
            }
            grad_b += err;
        }
        for (w, g) in weights.iter_mut().zip(grad) {
            *w -= params.learning_rate * (g / n + params.l2 * *w);
        }
        intercept -= params.learning_rate * grad_b / n;
    }

    let mut model = LogisticModel {
        weights,
        intercept,
        standardizer,
        params: *params,
        seed,
        training_accuracy: 0.0,
    };
    let correct = labelled
        .iter()
        .filter(|(r, y)| model.predict(&r.features, r.sex) == *y)
        .count();
    model.training_accuracy = correct as f64 / labelled.len() as f64;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::census::data::CensusRow;

    fn row(a: f64, b: f64, label: bool) -> CensusRow {
        CensusRow {
            features: [a, b, 0.0, 0.0, 0.0],
            sex: Sex::Female,
            name_token: None,
            label: Some(label),
        }
    }

    fn separable() -> TabularDataset {
        let mut rows = Vec::new();
        for i in 0..20 {
            let t = i as f64;
            rows.push(row(t, 20.0 - t + 3.0, false));
            rows.push(row(t + 6.0, 20.0 - t + 9.0, true));
        }
        TabularDataset { rows }
    }

    #[test]
    fn separable_toy_is_fit_exactly() {
        let params = TrainParams {
            epochs: 2000,
            ..TrainParams::default()
        };
        let model = train_logistic(&separable(), &params, 1).unwrap();
        assert_eq!(model.training_accuracy, 1.0);
        assert!(model.weights.iter().all(|w| w.is_finite()));
    }

    #[test]
    fn training_is_deterministic() {
        let data = separable();
        let a = train_logistic(&data, &TrainParams::default(), 5).unwrap();
        let b = train_logistic(&data, &TrainParams::default(), 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_class_and_unlabelled_are_rejected() {
        let one_class = TabularDataset {
            rows: vec![row(1.0, 2.0, true), row(2.0, 3.0, true)],
        };
        assert!(matches!(
            train_logistic(&one_class, &TrainParams::default(), 0),
            Err(CensusError::SingleClass)
        ));
        let mut unlabelled = separable();
        unlabelled.rows[3].label = None;
        assert!(matches!(
            train_logistic(&unlabelled, &TrainParams::default(), 0),
            Err(CensusError::MissingField("label"))
        ));
    }
}
