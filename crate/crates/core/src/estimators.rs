//! Decision layer: economic parity, the t-accuracy error model, and
//! disparate impact.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::platform::Micros;

/// Economic parity holds when the estimate exceeds this value.
pub const PARITY_THRESHOLD: f64 = 0.8;

/// Disparate impact signals a violation at or below this value.
pub const DI_THRESHOLD: f64 = 0.8;

#[derive(Debug, Error, PartialEq)]
pub enum EstimatorError {
    #[error("no pair of samples with distinct popularity")]
    NoComparablePairs,
    #[error("budget must be at least one sample")]
    ZeroBudget,
    #[error("margin error {0} outside (0, {1}]")]
    EpsilonOutOfRange(f64, f64),
    #[error("group `{0}` has no samples")]
    EmptyGroup(&'static str),
    #[error("neither group has a positive outcome; disparate impact is undefined")]
    NoPositiveOutcomes,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParityEstimate {
    pub value: f64,
    pub pairs_used: u64,
    /// Z: true when parity is deemed satisfied.
    pub decision: bool,
}

/// `P(e < e' | p < p')` over all pairs with strictly different popularity.
///
/// Pairs with equal popularity are excluded; pairs with `p < p'` and equal
/// earnings count as failures. Runs in `O(n log n)`.
pub fn economic_parity(samples: &[(u64, Micros)]) -> Result<ParityEstimate, EstimatorError> {
    let n = samples.len() as u64;
    let mut by_pop: Vec<(u64, u64)> = samples.iter().map(|&(p, e)| (p, e.0)).collect();
    by_pop.sort_unstable();

    let mut earnings: Vec<u64> = by_pop.iter().map(|&(_, e)| e).collect();
    earnings.sort_unstable();
    earnings.dedup();
    let rank = |e: u64| earnings.binary_search(&e).expect("value present");

    let mut tree = Fenwick::new(earnings.len());
    let mut successes = 0u64;
    let mut tied_pairs = 0u64;
    let mut start = 0;
    while start < by_pop.len() {
        let p = by_pop[start].0;
        let end = start + by_pop[start..].partition_point(|&(q, _)| q == p);
        let group = &by_pop[start..end];
        for &(_, e) in group {
            successes += tree.prefix(rank(e));
        }
        for &(_, e) in group {
            tree.add(rank(e));
        }
        let g = group.len() as u64;
        tied_pairs += g * (g - 1) / 2;
        start = end;
    }

    let pairs = n * n.saturating_sub(1) / 2 - tied_pairs;
    if pairs == 0 {
        return Err(EstimatorError::NoComparablePairs);
    }
    let value = successes as f64 / pairs as f64;
    Ok(ParityEstimate {
        value,
        pairs_used: pairs,
        decision: value > PARITY_THRESHOLD,
    })
}

/// Counts of inserted ranks; `prefix(r)` counts entries with rank `< r`.
struct Fenwick {
    tree: Vec<u64>,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Fenwick {
            tree: vec![0; n + 1],
        }
    }

    fn add(&mut self, rank: usize) {
        let mut i = rank + 1;
        while i < self.tree.len() {
            self.tree[i] += 1;
            i += i & i.wrapping_neg();
        }
    }

    fn prefix(&self, rank: usize) -> u64 {
        let mut i = rank;
        let mut total = 0;
        while i > 0 {
            total += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        total
    }
}

/// CLT margin-error model `ε = α·sqrt(q(1−q)/t_A)`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorModel {
    /// z-score at the chosen confidence level.
    pub alpha: f64,
    /// Confidence complement matching `alpha`.
    pub delta: f64,
    /// Variance bound q(1−q); 0.25 is the worst case.
    pub q_worst: f64,
}

impl Default for ErrorModel {
    fn default() -> Self {
        ErrorModel {
            alpha: 1.96,
            delta: 0.05,
            q_worst: 0.25,
        }
    }
}

impl ErrorModel {
    pub fn epsilon(&self, t_a: u64) -> Result<f64, EstimatorError> {
        if t_a == 0 {
            return Err(EstimatorError::ZeroBudget);
        }
        Ok(self.alpha * (self.q_worst / t_a as f64).sqrt())
    }

    /// Largest margin error this model can report (at `t_A = 1`).
    pub fn max_epsilon(&self) -> f64 {
        self.alpha * self.q_worst.sqrt()
    }

    /// Smallest `t_A` whose margin error is at most `epsilon`.
    pub fn budget(&self, epsilon: f64) -> Result<u64, EstimatorError> {
        let max = self.max_epsilon();
        if !(epsilon > 0.0 && epsilon <= max) {
            return Err(EstimatorError::EpsilonOutOfRange(epsilon, max));
        }
        let guess = (self.alpha * self.alpha * self.q_worst / (epsilon * epsilon)).ceil() as u64;
        let mut t = guess.max(1);
        // The closed form can be off by one either way in floating point.
        while t > 1 && self.epsilon(t - 1)? <= epsilon {
            t -= 1;
        }
        while self.epsilon(t)? > epsilon {
            t += 1;
        }
        Ok(t)
    }

    pub fn accuracy(&self, t_a: u64) -> Result<AccuracyBudget, EstimatorError> {
        Ok(AccuracyBudget {
            t_a,
            epsilon: self.epsilon(t_a)?,
            alpha: self.alpha,
            delta: self.delta,
            q_worst: self.q_worst,
        })
    }
}

/// Margin error achieved by a realized number of A-samples.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyBudget {
    pub t_a: u64,
    pub epsilon: f64,
    pub alpha: f64,
    pub delta: f64,
    pub q_worst: f64,
}

/// `1.96·sqrt(0.25/t_A)`.
pub fn epsilon_from_budget(t_a: u64) -> Result<f64, EstimatorError> {
    ErrorModel::default().epsilon(t_a)
}

/// Smallest `t_A` with `epsilon_from_budget(t_A) <= epsilon`.
pub fn budget_from_epsilon(epsilon: f64) -> Result<u64, EstimatorError> {
    ErrorModel::default().budget(epsilon)
}

/// Which group's positive rate goes in the numerator.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiOrientation {
    /// `P(Y=1 | unprotected) / P(Y=1 | protected)`.
    #[default]
    AsWritten,
    /// `P(Y=1 | protected) / P(Y=1 | unprotected)`.
    Swapped,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisparateImpactEstimate {
    /// May be `f64::INFINITY` when the denominator group has no positives.
    pub di: f64,
    pub rate_unprotected: f64,
    pub rate_protected: f64,
    pub violation: bool,
}

impl DisparateImpactEstimate {
    pub fn is_infinite(&self) -> bool {
        self.di.is_infinite()
    }
}

/// Disparate impact of `(protected, positive_outcome)` samples.
pub fn disparate_impact(
    samples: &[(bool, bool)],
    orientation: DiOrientation,
) -> Result<DisparateImpactEstimate, EstimatorError> {
    let (mut n_prot, mut pos_prot, mut n_unprot, mut pos_unprot) = (0u64, 0u64, 0u64, 0u64);
    for &(protected, positive) in samples {
        if protected {
            n_prot += 1;
            pos_prot += u64::from(positive);
        } else {
            n_unprot += 1;
            pos_unprot += u64::from(positive);
        }
    }
    if n_prot == 0 {
        return Err(EstimatorError::EmptyGroup("protected"));
    }
    if n_unprot == 0 {
        return Err(EstimatorError::EmptyGroup("unprotected"));
    }
    let rate_protected = pos_prot as f64 / n_prot as f64;
    let rate_unprotected = pos_unprot as f64 / n_unprot as f64;
    let (num, den) = match orientation {
        DiOrientation::AsWritten => (rate_unprotected, rate_protected),
        DiOrientation::Swapped => (rate_protected, rate_unprotected),
    };
    let di = if den > 0.0 {
        num / den
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        return Err(EstimatorError::NoPositiveOutcomes);
    };
    Ok(DisparateImpactEstimate {
        di,
        rate_unprotected,
        rate_protected,
        violation: di <= DI_THRESHOLD,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(v: &[(u64, u64)]) -> Vec<(u64, Micros)> {
        v.iter().map(|&(p, e)| (p, Micros(e))).collect()
    }

    #[test]
    fn parity_basic_cases() {
        let est = economic_parity(&m(&[(1, 10), (2, 20), (3, 30)])).unwrap();
        assert_eq!((est.value, est.pairs_used, est.decision), (1.0, 3, true));
        let est = economic_parity(&m(&[(1, 20), (2, 10)])).unwrap();
        assert_eq!((est.value, est.decision), (0.0, false));
    }

    #[test]
    fn parity_tie_policy() {
        // equal popularity is excluded entirely
        let est = economic_parity(&m(&[(1, 10), (1, 5), (2, 20)])).unwrap();
        assert_eq!((est.value, est.pairs_used), (1.0, 2));
        // equal earnings with p < p' is a failure
        let est = economic_parity(&m(&[(1, 10), (2, 10)])).unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(
            economic_parity(&m(&[(3, 1), (3, 2)])),
            Err(EstimatorError::NoComparablePairs)
        );
        assert_eq!(economic_parity(&[]), Err(EstimatorError::NoComparablePairs));
    }

    #[test]
    fn decision_is_strictly_above_threshold() {
        // 8 of 10 pairs succeed: exactly 0.8 is not enough
        let samples = m(&[(1, 2), (2, 1), (3, 3), (4, 5), (5, 4)]);
        let est = economic_parity(&samples).unwrap();
        assert_eq!(est.pairs_used, 10);
        assert_eq!(est.value, 0.8);
        assert!(!est.decision);
        let above = m(&[(1, 1), (2, 3), (3, 2), (4, 4), (5, 5), (6, 6)]);
        let est = economic_parity(&above).unwrap();
        assert!(est.value > 0.8 && est.decision);
    }

    #[test]
    fn epsilon_values() {
        assert!((epsilon_from_budget(96).unwrap() - 0.10002).abs() < 1e-5);
        assert!((epsilon_from_budget(9604).unwrap() - 0.01).abs() < 1e-12);
        assert_eq!(epsilon_from_budget(1).unwrap(), 0.98);
        assert_eq!(epsilon_from_budget(0), Err(EstimatorError::ZeroBudget));
    }

    #[test]
    fn budget_inverse_matches_integer_search() {
        let search = |eps: f64| (1..).find(|&t| epsilon_from_budget(t).unwrap() <= eps).unwrap();
        assert_eq!(search(0.1), 97);
        assert_eq!(budget_from_epsilon(0.1).unwrap(), 97);
        assert_eq!(budget_from_epsilon(0.98).unwrap(), 1);
        for eps in [0.5, 0.25, 0.05, 0.0312, 0.02] {
            assert_eq!(budget_from_epsilon(eps).unwrap(), search(eps), "{eps}");
        }
        assert!(budget_from_epsilon(0.0).is_err());
        assert!(budget_from_epsilon(0.99).is_err());
        assert!(budget_from_epsilon(f64::NAN).is_err());
    }

    #[test]
    fn disparate_impact_cases() {
        let equal = [(true, true), (true, false), (false, true), (false, false)];
        let est = disparate_impact(&equal, DiOrientation::AsWritten).unwrap();
        assert_eq!((est.di, est.violation), (1.0, false));

        // unprotected 1/5, protected 4/5
        let mut s = vec![(false, true)];
        s.extend([(false, false); 4]);
        s.extend([(true, true); 4]);
        s.push((true, false));
        let est = disparate_impact(&s, DiOrientation::AsWritten).unwrap();
        assert!((est.di - 0.25).abs() < 1e-12);
        assert!(est.violation);
        let swapped = disparate_impact(&s, DiOrientation::Swapped).unwrap();
        assert!((swapped.di - 4.0).abs() < 1e-12);
        assert!(!swapped.violation);
    }

    #[test]
    fn disparate_impact_degenerate_groups() {
        let s = [(false, true), (true, false)];
        let est = disparate_impact(&s, DiOrientation::AsWritten).unwrap();
        assert!(est.is_infinite() && !est.violation);
        assert_eq!(
            disparate_impact(&[(false, true)], DiOrientation::AsWritten),
            Err(EstimatorError::EmptyGroup("protected"))
        );
        assert_eq!(
            disparate_impact(&[(false, false), (true, false)], DiOrientation::AsWritten),
            Err(EstimatorError::NoPositiveOutcomes)
        );
    }

    proptest! {
        #[test]
        fn parity_is_scale_and_permutation_invariant(
            raw in prop::collection::vec((0u64..50, 0u64..50), 2..40),
            scale in 1u64..1000,
            rot in 0usize..40,
        ) {
            let base = m(&raw);
            prop_assume!(economic_parity(&base).is_ok());
            let est = economic_parity(&base).unwrap();

            let scaled: Vec<_> = base.iter().map(|&(p, e)| (p, Micros(e.0 * scale))).collect();
            prop_assert_eq!(economic_parity(&scaled).unwrap(), est);

            let mut rotated = base.clone();
            let k = rot % rotated.len();
            rotated.rotate_left(k);
            rotated.reverse();
            prop_assert_eq!(economic_parity(&rotated).unwrap(), est);
        }

        #[test]
        fn epsilon_strictly_decreasing(t in 1u64..1_000_000) {
            prop_assert!(epsilon_from_budget(t + 1).unwrap() < epsilon_from_budget(t).unwrap());
        }

        #[test]
        fn budget_round_trip(eps in 0.001f64..=0.98) {
            let t = budget_from_epsilon(eps).unwrap();
            prop_assert!(epsilon_from_budget(t).unwrap() <= eps);
            if t > 1 {
                prop_assert!(epsilon_from_budget(t - 1).unwrap() > eps);
            }
        }
    }
}
