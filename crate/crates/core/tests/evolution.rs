use fame::evolution::{
    cotrain_halves, fame_cotrain, fame_iteration, fame_run, parse_trace, write_trace, ClassPool, FameConfig,
    FameState, NegativePool, Scoring, StopReason,
};
use fame::features::FeatureMatrix;
use fame::linear::{Loss, SolverOptions};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn gaussian_rows(center: &[f64], sd: f64, n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let normal = Normal::new(0.0, sd).unwrap();
    (0..n)
        .map(|_| center.iter().map(|c| c + normal.sample(rng)).collect())
        .collect()
}

/// `clean` rows near `+e1` followed by `planted` rows near `-e1`, plus
/// negatives near `-e1`. Class ids start at 0, negative ids at 1000.
fn fixture(clean: usize, planted: usize, negatives: usize, seed: u64) -> (ClassPool, NegativePool) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = gaussian_rows(&[1.0, 0.0, 0.0], 0.2, clean, &mut rng);
    rows.extend(gaussian_rows(&[-1.0, 0.0, 0.0], 0.2, planted, &mut rng));
    let pool = ClassPool::from_features(FeatureMatrix::from_rows(&rows, vec![0; rows.len()]).unwrap());
    let neg_rows = gaussian_rows(&[-1.0, 0.0, 0.0], 0.3, negatives, &mut rng);
    let ids = (1000..1000 + negatives as u64).collect();
    let neg = NegativePool::new(
        FeatureMatrix::from_rows(&neg_rows, vec![-1; negatives]).unwrap(),
        ids,
    )
    .unwrap();
    (pool, neg)
}

fn cfg(o: usize, scoring: Scoring) -> FameConfig {
    FameConfig {
        outliers_per_iteration: o,
        scoring,
        solver: SolverOptions::with_lambda(0.1),
        ..Default::default()
    }
}

#[test]
fn planted_pair_is_removed_first() {
    let (pool, neg) = fixture(8, 2, 20, 1);
    for scoring in [Scoring::TwoModel, Scoring::M1Only] {
        for loss in [Loss::Logistic, Loss::SquaredHinge] {
            let c = FameConfig {
                loss,
                max_prune_fraction: 0.2,
                ..cfg(2, scoring)
            };
            let state = fame_iteration(FameState::new(pool.clone()), &neg, &c).unwrap();
            let mut out = state.traces[0].outliers.clone();
            out.sort_unstable();
            assert_eq!(out, vec![8, 9], "{scoring:?} {loss:?}");
            assert_eq!(state.pool.active_count(), 8);

            let (pruned, run) = fame_run(pool.clone(), &neg, &c).unwrap();
            assert_eq!(run.t, 1);
            assert_eq!(run.stop_reason, Some(StopReason::PruneLimit));
            assert_eq!(pruned.eliminated_indices(), vec![8, 9]);
        }
    }
}

#[test]
fn two_model_trace_is_consistent() {
    let (pool, neg) = fixture(16, 4, 40, 2);
    let state = fame_iteration(FameState::new(pool), &neg, &cfg(3, Scoring::TwoModel)).unwrap();
    let t = &state.traces[0];
    assert_eq!(t.cplus.len() + t.cminus.len(), 20);
    assert_eq!(t.cplus.len(), 10);
    assert!(t.cminus.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(t.scores_m1.len(), t.cminus.len());
    assert_eq!(t.scores_m2.len(), t.cminus.len());
    for ((a, b), s) in t.scores_m1.iter().zip(&t.scores_m2).zip(&t.aggregated) {
        assert!((a + b - s).abs() < 1e-12);
    }
    // outliers are the lowest aggregated scores among C-
    let mut ranked: Vec<(f64, u64)> = t
        .aggregated
        .iter()
        .copied()
        .zip(t.cminus.iter().copied())
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let expect: Vec<u64> = ranked.iter().take(3).map(|r| r.1).collect();
    assert_eq!(t.outliers, expect);
}

#[test]
fn clean_pool_stops_at_the_floor() {
    for (m, o) in [(100, 5), (97, 5), (100, 3), (41, 5)] {
        let (pool, neg) = fixture(m, 0, 60, m as u64);
        let (pruned, state) = fame_run(pool, &neg, &cfg(o, Scoring::TwoModel)).unwrap();
        let floor = (0.1 * m as f64).ceil() as usize;
        assert_eq!(pruned.eliminated_count(), floor, "m {m} o {o}");
        assert_eq!(state.t, floor.div_ceil(o));
        assert!(state.traces.iter().all(|t| t.outliers.len() <= o));
    }
}

#[test]
fn smaller_o_needs_more_iterations() {
    let (pool, neg) = fixture(90, 10, 60, 3);
    let (_, five) = fame_run(pool.clone(), &neg, &cfg(5, Scoring::TwoModel)).unwrap();
    let (_, one) = fame_run(pool, &neg, &cfg(1, Scoring::TwoModel)).unwrap();
    assert_eq!(five.t, 2);
    assert_eq!(one.t, 10);
    let planted = |s: &FameState| s.eliminated_ids().iter().filter(|&&i| i >= 90).count();
    assert!(planted(&five) >= 8 && planted(&one) >= 8);
}

#[test]
fn runs_are_deterministic() {
    let (pool, neg) = fixture(60, 6, 50, 4);
    let c = FameConfig {
        negative_sample_size: Some(25),
        seed: 7,
        ..cfg(2, Scoring::TwoModel)
    };
    let (_, a) = fame_run(pool.clone(), &neg, &c).unwrap();
    let (_, b) = fame_run(pool.clone(), &neg, &c).unwrap();
    assert_eq!(write_trace(&a.traces), write_trace(&b.traces));
    let other = FameConfig { seed: 8, ..c };
    let (_, d) = fame_run(pool, &neg, &other).unwrap();
    assert_ne!(write_trace(&a.traces), write_trace(&d.traces));
}

#[test]
fn traces_round_trip_from_a_real_run() {
    let (pool, neg) = fixture(40, 4, 30, 5);
    let (_, state) = fame_run(pool, &neg, &cfg(2, Scoring::TwoModel)).unwrap();
    let text = write_trace(&state.traces);
    assert_eq!(parse_trace(&text).unwrap(), state.traces);
}

#[test]
fn overlapping_negatives_are_rejected() {
    let (pool, _) = fixture(10, 0, 1, 6);
    let rows: Vec<Vec<f64>> = vec![vec![-1.0, 0.0, 0.0]; 3];
    let neg = NegativePool::new(
        FeatureMatrix::from_rows(&rows, vec![-1; 3]).unwrap(),
        vec![100, 3, 101],
    )
    .unwrap();
    assert!(fame_run(pool, &neg, &cfg(1, Scoring::TwoModel)).is_err());
}

#[test]
fn tiny_pool_is_rejected() {
    let (pool, neg) = fixture(2, 0, 10, 7);
    assert!(fame_iteration(FameState::new(pool), &neg, &cfg(1, Scoring::TwoModel)).is_err());
}

#[test]
fn cotrain_on_identical_halves_is_symmetric() {
    let (pool, neg) = fixture(30, 4, 40, 8);
    let [a, b] = cotrain_halves(pool.clone(), pool.clone(), &neg, &cfg(2, Scoring::TwoModel)).unwrap();
    assert_eq!(write_trace(&a.traces), write_trace(&b.traces));
    for t in &a.traces {
        assert!((0.0..=1.0).contains(&t.stop_accuracy));
    }
    let (m1, rest) = (a.last_m1.as_ref().unwrap(), &b.pool);
    let positive = rest
        .active_indices()
        .iter()
        .filter(|&&i| m1.decision(rest.features().row(i)).unwrap() > 0.0)
        .count();
    let last = a.traces.last().unwrap().stop_accuracy;
    assert_eq!(last, positive as f64 / rest.active_count() as f64);
}

#[test]
fn cotrain_merges_both_halves() {
    let (pool, neg) = fixture(60, 6, 40, 9);
    let (merged, [a, b]) = fame_cotrain(pool, &neg, &cfg(2, Scoring::TwoModel)).unwrap();
    assert_eq!(a.pool.m() + b.pool.m(), 66);
    let mut expect: Vec<u64> = a.eliminated_ids().into_iter().chain(b.eliminated_ids()).collect();
    expect.sort_unstable();
    let got: Vec<u64> = merged
        .eliminated_indices()
        .iter()
        .map(|&i| merged.source_id(i))
        .collect();
    assert_eq!(got, expect);
    assert_eq!(
        expect.len(),
        a.pool.eliminated_count() + b.pool.eliminated_count()
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn eliminations_are_valid(
        clean in 12usize..40,
        planted in 0usize..6,
        o in 1usize..6,
        frac in 0.05f64..0.4,
        seed in 0u64..500,
    ) {
        let (pool, neg) = fixture(clean, planted, 25, seed);
        let m = pool.m();
        let c = FameConfig { max_prune_fraction: frac, seed, ..cfg(o, Scoring::TwoModel) };
        let (pruned, state) = fame_run(pool, &neg, &c).unwrap();
        let ids = state.eliminated_ids();
        let mut unique = ids.clone();
        unique.sort_unstable();
        unique.dedup();
        prop_assert_eq!(unique.len(), ids.len());
        prop_assert!(ids.iter().all(|&i| (i as usize) < m));
        prop_assert!(state.traces.iter().all(|t| !t.outliers.is_empty() && t.outliers.len() <= o));
        prop_assert!(ids.len() <= c.prune_target(m));
        prop_assert_eq!(pruned.eliminated_count(), ids.len());
        prop_assert!(state.stop_reason.is_some());
    }
}
