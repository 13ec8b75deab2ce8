use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{FameConfig, ScoreCombination};
use super::pool::{ClassPool, NegativePool};
use crate::error::{FameError, Result};
use crate::linear::{sigmoid, SparseLinearModel};

/// Splits the active set by `m1` decision: the top `ceil(p |active|)` form the
/// candidate positives (capped so at least one instance remains on the other
/// side). Ties break by ascending source id. Candidate positives come back in
/// rank order, the rest in ascending source-id order.
pub fn select_top_positives(
    pool: &ClassPool,
    m1: &SparseLinearModel,
    p_fraction: f64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let active = pool.active_indices();
    if active.is_empty() {
        return Err(FameError::Argument("active set is empty".into()));
    }
    let decisions = active
        .iter()
        .map(|&i| m1.decision(pool.features().row(i)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(split_by_score(pool, &active, &decisions, p_fraction))
}

pub(crate) fn split_by_score(
    pool: &ClassPool,
    active: &[usize],
    decisions: &[f64],
    p_fraction: f64,
) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..active.len()).collect();
    order.sort_by(|&a, &b| {
        decisions[b]
            .total_cmp(&decisions[a])
            .then(pool.source_id(active[a]).cmp(&pool.source_id(active[b])))
    });
    let wanted = (p_fraction * active.len() as f64 - 1e-9).ceil().max(0.0) as usize;
    let take = wanted.min(active.len() - 1);
    let cplus: Vec<usize> = order[..take].iter().map(|&k| active[k]).collect();
    let mut cminus: Vec<usize> = order[take..].iter().map(|&k| active[k]).collect();
    cminus.sort_by_key(|&i| pool.source_id(i));
    (cplus, cminus)
}

/// Combines the two models' scores for one instance. `s1` and `s2` are raw
/// decision values; the probability rule passes them through the sigmoid.
pub fn aggregate_confidence(s1: f64, s2: f64, mode: ScoreCombination) -> f64 {
    match mode {
        ScoreCombination::SumLogOdds => s1 + s2,
        ScoreCombination::SumProbability => sigmoid(s1) + sigmoid(s2),
    }
}

/// The `min(o, n)` ids with the lowest scores, lowest first; ties by ascending id.
pub fn select_outliers(ids: &[u64], scores: &[f64], o: usize) -> Vec<u64> {
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(ids[a].cmp(&ids[b])));
    order.into_iter().take(o).map(|k| ids[k]).collect()
}

/// Negative rows used at iteration `t`: all of them when `size` is `None` or
/// covers the pool, otherwise a draw without replacement from the ChaCha
/// stream `t` of `seed`, returned in ascending row order.
pub fn sample_negatives(neg: &NegativePool, size: Option<usize>, seed: u64, t: usize) -> Vec<usize> {
    let l = neg.len();
    match size {
        Some(s) if s < l => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let mut picked = rand::seq::index::sample(&mut rng, l, s).into_vec();
            picked.sort_unstable();
            picked
        }
        _ => (0..l).collect(),
    }
}

/// Why an evolution run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// M1 accuracy dropped.
    Degraded,
    /// M1 accuracy improved by no more than the saturation delta.
    Saturated,
    /// The prune limit was reached without an accuracy signal.
    PruneLimit,
    /// Too few active instances remain to split.
    Exhausted,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Degraded => "degraded",
            StopReason::Saturated => "saturated",
            StopReason::PruneLimit => "prune_limit",
            StopReason::Exhausted => "exhausted",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Continue,
    Stop(StopReason),
}

/// Stopping rule. The accuracy signal (drop, or gain `<= saturation_delta`,
/// from the second iteration on) is ignored until `max_prune_fraction` of the
/// pool has been pruned. With `hard_stop_at_limit`, reaching that fraction
/// stops the run regardless of accuracy.
pub fn check_stop(acc_history: &[f64], pruned_fraction: f64, cfg: &FameConfig) -> StopDecision {
    let signal = match acc_history {
        [.., prev, last] if last < prev => Some(StopReason::Degraded),
        [.., prev, last] if last - prev <= cfg.saturation_delta => Some(StopReason::Saturated),
        _ => None,
    };
    let at_limit = pruned_fraction >= cfg.max_prune_fraction - 1e-12;
    match (signal, at_limit) {
        (_, false) => StopDecision::Continue,
        (Some(reason), true) => StopDecision::Stop(reason),
        (None, true) if cfg.hard_stop_at_limit => StopDecision::Stop(StopReason::PruneLimit),
        (None, true) => StopDecision::Continue,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureMatrix;
    use crate::linear::Loss;

    fn pool_1d(values: &[f64]) -> ClassPool {
        let rows: Vec<[f64; 1]> = values.iter().map(|&v| [v]).collect();
        ClassPool::from_features(FeatureMatrix::from_rows(&rows, vec![0; rows.len()]).unwrap())
    }

    fn identity_model() -> SparseLinearModel {
        SparseLinearModel::new(1, vec![(0, 1.0)], 0.0, 0.0, Loss::Logistic).unwrap()
    }

    #[test]
    fn top_positive_rank_arithmetic() {
        let p = pool_1d(&[3.0, 1.0, 2.0]);
        let (plus, minus) = select_top_positives(&p, &identity_model(), 0.34).unwrap();
        assert_eq!(plus, vec![0, 2]);
        assert_eq!(minus, vec![1]);
    }

    #[test]
    fn top_positives_leave_a_negative() {
        let p = pool_1d(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0]);
        let (plus, minus) = select_top_positives(&p, &identity_model(), 0.99).unwrap();
        assert_eq!((plus.len(), minus.len()), (9, 1));
    }

    #[test]
    fn equal_decisions_prefer_low_ids() {
        let p = pool_1d(&[0.5; 6]);
        let (plus, minus) = select_top_positives(&p, &identity_model(), 0.5).unwrap();
        assert_eq!(plus, vec![0, 1, 2]);
        assert_eq!(minus, vec![3, 4, 5]);
    }

    #[test]
    fn empty_active_set_is_an_error() {
        let mut p = pool_1d(&[1.0]);
        p.eliminate(&[0]).unwrap();
        assert!(select_top_positives(&p, &identity_model(), 0.5).is_err());
    }

    #[test]
    fn aggregation_rules() {
        assert!((aggregate_confidence(0.2, 0.3, ScoreCombination::SumLogOdds) - 0.5).abs() < 1e-15);
        assert_eq!(
            aggregate_confidence(0.0, 0.0, ScoreCombination::SumProbability),
            1.0
        );
        for mode in [ScoreCombination::SumLogOdds, ScoreCombination::SumProbability] {
            for (a, b) in [(-1.0, 2.0), (0.3, 0.7), (5.0, -4.0)] {
                assert_eq!(aggregate_confidence(a, b, mode), aggregate_confidence(b, a, mode));
                assert!(aggregate_confidence(a + 0.5, b, mode) >= aggregate_confidence(a, b, mode));
            }
        }
    }

    #[test]
    fn outlier_selection() {
        assert_eq!(select_outliers(&[10, 11, 12], &[5.0, -1.0, 3.0], 1), vec![11]);
        assert_eq!(
            select_outliers(&[10, 11, 12], &[5.0, -1.0, 3.0], 9),
            vec![11, 12, 10]
        );
        assert_eq!(select_outliers(&[8, 3, 5], &[1.0; 3], 2), vec![3, 5]);
    }

    #[test]
    fn negative_sampling_streams() {
        let rows: Vec<[f64; 1]> = (0..40).map(|i| [i as f64]).collect();
        let neg =
            NegativePool::from_features(FeatureMatrix::from_rows(&rows, vec![-1; 40]).unwrap()).unwrap();
        assert_eq!(sample_negatives(&neg, None, 1, 1), (0..40).collect::<Vec<_>>());
        assert_eq!(sample_negatives(&neg, Some(100), 1, 1).len(), 40);
        let a = sample_negatives(&neg, Some(10), 3, 1);
        assert_eq!(a, sample_negatives(&neg, Some(10), 3, 1));
        assert_ne!(a, sample_negatives(&neg, Some(10), 3, 2));
        assert_eq!(a.len(), 10);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn stop_rule_examples() {
        let cfg = FameConfig::default();
        assert_eq!(
            check_stop(&[0.80, 0.90, 0.89], 0.12, &cfg),
            StopDecision::Stop(StopReason::Degraded)
        );
        let cfg_sat = FameConfig {
            saturation_delta: 0.001,
            ..FameConfig::default()
        };
        assert_eq!(
            check_stop(&[0.80, 0.9000, 0.9004], 0.12, &cfg_sat),
            StopDecision::Stop(StopReason::Saturated)
        );
        assert_eq!(check_stop(&[0.80, 0.79], 0.02, &cfg), StopDecision::Continue);
        assert_eq!(check_stop(&[0.80], 0.02, &cfg), StopDecision::Continue);
        assert_eq!(
            check_stop(&[0.80, 0.85], 0.10, &cfg),
            StopDecision::Stop(StopReason::PruneLimit)
        );
        let soft = FameConfig {
            hard_stop_at_limit: false,
            ..FameConfig::default()
        };
        assert_eq!(check_stop(&[0.80, 0.85], 0.15, &soft), StopDecision::Continue);
        assert_eq!(
            check_stop(&[0.85, 0.85], 0.15, &soft),
            StopDecision::Stop(StopReason::Saturated)
        );
    }
}
