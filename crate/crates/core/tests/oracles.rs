use std::sync::Arc;

use auditlab_core::access::{Catalog, LocalAccess};
use auditlab_core::engine::{detect_probability, run_budgeted_audit, BudgetPlan};
use auditlab_core::estimators::economic_parity;
use auditlab_core::platform::{ceil_share, generate_platform, GeneratorConfig, Micros, PlatformState};
use auditlab_core::proxy::{check_consistency, ProxySpec};
use auditlab_core::sources::{ManipulatedApi, ManipulationStrategy, StrategyKind};
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use proptest::prelude::*;

fn binomial(n: u64, k: u64) -> BigUint {
    (0..k).fold(BigUint::one(), |acc, i| acc * (n - i) / (i + 1))
}

/// `1 − C(N−M, n) / C(N, n)` in exact integers.
fn exact_detect(total: u64, manipulated: u64, n: u64) -> f64 {
    if n > total - manipulated {
        return 1.0;
    }
    let miss = binomial(total - manipulated, n).to_f64().unwrap() / binomial(total, n).to_f64().unwrap();
    1.0 - miss
}

/// Counts comparable pairs directly, one pair at a time.
fn naive_parity(samples: &[(u64, Micros)]) -> Option<(f64, u64)> {
    let (mut pairs, mut agree) = (0u64, 0u64);
    for a in samples {
        for b in samples {
            if a.0 < b.0 {
                pairs += 1;
                agree += u64::from(a.1 < b.1);
            }
        }
    }
    (pairs > 0).then(|| (agree as f64 / pairs as f64, pairs))
}

fn small_platform(seed: u64, n: usize) -> Arc<PlatformState> {
    let config = GeneratorConfig {
        n_creators: n,
        ..GeneratorConfig::with_seed(seed)
    };
    Arc::new(generate_platform(&config).unwrap())
}

fn strategy(kind: usize, x: f64, seed: u64) -> ManipulationStrategy {
    let kind = [
        StrategyKind::None,
        StrategyKind::DemotePrivileged,
        StrategyKind::PromoteRegular,
        StrategyKind::BubbleSwap,
    ][kind];
    if kind == StrategyKind::None {
        ManipulationStrategy::honest()
    } else {
        ManipulationStrategy::new(kind, x, seed).unwrap()
    }
}

#[test]
fn parity_matches_pair_enumeration_on_all_small_sets() {
    // Every multiset of up to 6 points over a 3x3 grid of (p, e).
    fn walk(start: usize, prefix: &mut Vec<(u64, Micros)>, checked: &mut usize) {
        match (economic_parity(prefix), naive_parity(prefix)) {
            (Ok(est), Some((value, pairs))) => {
                assert_eq!(est.value, value, "{prefix:?}");
                assert_eq!(est.pairs_used, pairs, "{prefix:?}");
                assert_eq!(est.decision, value > 0.8, "{prefix:?}");
            }
            (Err(_), None) => {}
            (got, want) => panic!("{prefix:?}: {got:?} vs {want:?}"),
        }
        *checked += 1;
        if prefix.len() == 6 {
            return;
        }
        for cell in start..9 {
            prefix.push((cell as u64 / 3, Micros(cell as u64 % 3)));
            walk(cell, prefix, checked);
            prefix.pop();
        }
    }
    let mut checked = 0;
    walk(0, &mut Vec::new(), &mut checked);
    // Multisets of size 0..=6 from 9 cells: sum of C(9+k-1, k).
    assert_eq!(checked, 1 + 9 + 45 + 165 + 495 + 1287 + 3003);
}

#[test]
fn detect_probability_matches_exact_binomials() {
    for total in [1u64, 2, 7, 40, 200] {
        for manipulated in 0..=total {
            for n in 0..=total {
                let got = detect_probability(total, manipulated, n).unwrap();
                let want = exact_detect(total, manipulated, n);
                assert!((got - want).abs() < 1e-12, "N={total} M={manipulated} n={n}: {got} vs {want}");
            }
        }
    }
    assert!(detect_probability(5, 6, 1).is_err());
    assert!(detect_probability(5, 1, 6).is_err());
}

#[test]
fn platform_survives_a_file_round_trip() {
    let state = small_platform(21, 200);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("platform.json");
    std::fs::write(&path, state.to_json().unwrap()).unwrap();
    let back = PlatformState::from_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back.to_json().unwrap(), state.to_json().unwrap());
    assert_eq!(back.true_samples(), state.true_samples());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn detect_probability_is_exact(total in 1u64..120, m in 0u64..120, n in 0u64..120) {
        let (m, n) = (m % (total + 1), n % (total + 1));
        let got = detect_probability(total, m, n).unwrap();
        prop_assert!((got - exact_detect(total, m, n)).abs() < 1e-12);
    }

    #[test]
    fn generated_platforms_hold_their_identities(seed in 0u64..1000, n in 1usize..300) {
        let state = small_platform(seed, n);
        prop_assert_eq!(state.to_json().unwrap(), small_platform(seed, n).to_json().unwrap());
        prop_assert_eq!(state.privileged_ids().len(), ceil_share(n, state.config().privileged_fraction));
        for c in state.creators() {
            let pop = state.true_popularity(c.id).unwrap();
            prop_assert_eq!(state.true_earnings(c.id).unwrap(), c.rate.times(pop));
        }
    }

    #[test]
    fn ledger_never_exceeds_budget(
        seed in 0u64..200, t in 1u64..400, beta in 0.0f64..=1.0, kind in 0usize..4, x in 0.0f64..=1.0,
    ) {
        let api = Arc::new(ManipulatedApi::new(small_platform(seed, 60), strategy(kind, x, seed)).unwrap());
        let result = run_budgeted_audit(&mut LocalAccess::new(api), &BudgetPlan::new(t, beta, seed), &ProxySpec::perfect());
        if let Ok(r) = result {
            prop_assert!(r.ledger.spent() <= t);
            prop_assert_eq!(r.ledger.spent_a, r.arm1_pulls + r.arm2_pulls);
            prop_assert_eq!(r.t_a(), r.arm1_pulls + r.arm2_pulls);
            if kind == 0 {
                prop_assert!(!r.detected());
            }
        }
    }

    #[test]
    fn consistency_checks_are_sound_complete_and_blind(seed in 0u64..200, kind in 1usize..4, x in 0.0f64..=1.0) {
        let state = small_platform(seed, 40);
        let api = ManipulatedApi::new(state.clone(), strategy(kind, x, seed)).unwrap();
        let honest = ManipulatedApi::honest(state.clone());
        let poor = ProxySpec::poor(state.input_space_size(), 0.5 / state.input_space_size() as f64).unwrap();
        let catalog = Catalog::of(&state);
        for entry in &catalog.creators {
            let scraps: Vec<_> = entry.video_ids.iter().map(|&v| api.scrape_query(v).unwrap()).collect();
            let declared = api.api_query(entry.creator_id).unwrap();
            let truth = honest.api_query(entry.creator_id).unwrap();
            prop_assert!(check_consistency(&truth, &scraps, true).unwrap().is_none());
            let flagged = check_consistency(&declared, &scraps, true).unwrap().is_some();
            prop_assert_eq!(flagged, declared.earnings != truth.earnings);
            prop_assert!(poor.inspect(&declared, &scraps, true).unwrap().is_none());
        }
    }
}
