use log::debug;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{FameConfig, Scoring};
use super::pool::{ClassPool, NegativePool};
use super::select::{
    aggregate_confidence, check_stop, sample_negatives, select_outliers, split_by_score, StopDecision,
    StopReason,
};
use crate::error::{FameError, Result};
use crate::features::FeatureMatrix;
use crate::linear::{train_binary, SparseLinearModel};

/// What happened in one evolution iteration. Ids are source ids.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub iteration: usize,
    /// M1 accuracy on its own training data.
    pub m1_accuracy: f64,
    /// Accuracy consumed by the stopping rule (equals `m1_accuracy` except in co-training).
    pub stop_accuracy: f64,
    /// Candidate positives, most confident first.
    pub cplus: Vec<u64>,
    /// Candidates for elimination, ascending id; the score vectors align with it.
    pub cminus: Vec<u64>,
    /// Eliminated this iteration, lowest score first.
    pub outliers: Vec<u64>,
    pub scores_m1: Vec<f64>,
    pub scores_m2: Vec<f64>,
    pub aggregated: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FameState {
    /// Iterations completed.
    pub t: usize,
    pub pool: ClassPool,
    /// Stopping-rule accuracy per iteration.
    pub acc_history: Vec<f64>,
    pub traces: Vec<IterationTrace>,
    pub stop_reason: Option<StopReason>,
    /// First model of the latest iteration.
    pub last_m1: Option<SparseLinearModel>,
}

impl FameState {
    pub fn new(pool: ClassPool) -> Self {
        FameState {
            t: 0,
            pool,
            acc_history: Vec::new(),
            traces: Vec::new(),
            stop_reason: None,
            last_m1: None,
        }
    }

    /// All eliminated source ids in elimination order.
    pub fn eliminated_ids(&self) -> Vec<u64> {
        self.traces
            .iter()
            .flat_map(|t| t.outliers.iter().copied())
            .collect()
    }
}

/// Stacks `positives` (+1) over `negatives` (-1).
fn stack(positives: &FeatureMatrix, negatives: &FeatureMatrix) -> Result<(FeatureMatrix, Vec<f64>)> {
    let mut values = Vec::with_capacity(positives.values().len() + negatives.values().len());
    values.extend_from_slice(positives.values());
    values.extend_from_slice(negatives.values());
    let n = positives.n() + negatives.n();
    let y = (0..n)
        .map(|i| if i < positives.n() { 1.0 } else { -1.0 })
        .collect();
    Ok((FeatureMatrix::new(positives.dim(), values, vec![0; n])?, y))
}

/// One pass of the loop with the configured elimination count.
pub fn fame_iteration(state: FameState, neg: &NegativePool, cfg: &FameConfig) -> Result<FameState> {
    cfg.validate()?;
    iterate(state, neg, cfg, cfg.outliers_per_iteration)
}

fn iterate(
    mut state: FameState,
    neg: &NegativePool,
    cfg: &FameConfig,
    eliminate: usize,
) -> Result<FameState> {
    if eliminate == 0 {
        return Err(FameError::Argument(
            "iteration must eliminate at least one instance".into(),
        ));
    }
    let pool = &state.pool;
    let active = pool.active_indices();
    if active.len() < 3 {
        return Err(FameError::Argument(format!(
            "active set has {} instances; at least 3 are needed",
            active.len()
        )));
    }
    if neg.features().dim() != pool.features().dim() {
        return Err(FameError::Dimension(
            "negatives and class pool differ in dimension".into(),
        ));
    }
    let t = state.t + 1;

    let negatives = neg
        .features()
        .select(&sample_negatives(neg, cfg.negative_sample_size, cfg.seed, t));
    let class_rows = pool.features().select(&active);
    let (x1, y1) = stack(&class_rows, &negatives)?;
    let (m1, report1) = train_binary(&x1, &y1, cfg.loss, &cfg.solver)?;
    let decisions: Vec<f64> = class_rows.rows().map(|r| m1.decision_unchecked(r)).collect();

    let trace = match cfg.scoring {
        Scoring::TwoModel => {
            let (cplus, cminus) = split_by_score(pool, &active, &decisions, cfg.p_fraction);
            if cplus.is_empty() {
                return Err(FameError::Argument("candidate positive set C+ is empty".into()));
            }
            if cminus.is_empty() {
                return Err(FameError::Argument("possible negative set C- is empty".into()));
            }
            let plus_rows = pool.features().select(&cplus);
            let minus_rows = pool.features().select(&cminus);
            let (x2, y2) = stack(&plus_rows, &minus_rows)?;
            let (m2, _) = train_binary(&x2, &y2, cfg.loss, &cfg.solver)?;

            let scores_m1: Vec<f64> = minus_rows.rows().map(|r| m1.decision_unchecked(r)).collect();
            let scores_m2: Vec<f64> = minus_rows.rows().map(|r| m2.decision_unchecked(r)).collect();
            let aggregated: Vec<f64> = scores_m1
                .iter()
                .zip(&scores_m2)
                .map(|(&a, &b)| aggregate_confidence(a, b, cfg.score_combination))
                .collect();
            let cminus_ids: Vec<u64> = cminus.iter().map(|&i| pool.source_id(i)).collect();
            IterationTrace {
                iteration: t,
                m1_accuracy: report1.training_accuracy,
                stop_accuracy: report1.training_accuracy,
                cplus: cplus.iter().map(|&i| pool.source_id(i)).collect(),
                outliers: select_outliers(&cminus_ids, &aggregated, eliminate),
                cminus: cminus_ids,
                scores_m1,
                scores_m2,
                aggregated,
            }
        }
        Scoring::M1Only => {
            let ids: Vec<u64> = active.iter().map(|&i| pool.source_id(i)).collect();
            IterationTrace {
                iteration: t,
                m1_accuracy: report1.training_accuracy,
                stop_accuracy: report1.training_accuracy,
                cplus: Vec::new(),
                outliers: select_outliers(&ids, &decisions, eliminate),
                cminus: ids,
                scores_m1: decisions.clone(),
                scores_m2: Vec::new(),
                aggregated: decisions,
            }
        }
    };

    let lookup = pool.id_index();
    let removed: Vec<usize> = trace.outliers.iter().map(|s| lookup[s]).collect();
    state.pool.eliminate(&removed)?;
    debug!(
        "iteration {t}: M1 accuracy {:.4}, removed {:?}",
        trace.m1_accuracy, trace.outliers
    );
    state.t = t;
    state.acc_history.push(trace.stop_accuracy);
    state.traces.push(trace);
    state.last_m1 = Some(m1);
    Ok(state)
}

/// Eliminations allowed in the next iteration of `state`.
fn next_budget(state: &FameState, cfg: &FameConfig) -> usize {
    if cfg.hard_stop_at_limit {
        let target = cfg.prune_target(state.pool.m());
        cfg.outliers_per_iteration
            .min(target.saturating_sub(state.pool.eliminated_count()))
    } else {
        cfg.outliers_per_iteration
    }
}

/// Iterates until the stopping rule fires. Returns the pruned pool and the full state.
pub fn fame_run(pool: ClassPool, neg: &NegativePool, cfg: &FameConfig) -> Result<(ClassPool, FameState)> {
    cfg.validate()?;
    neg.check_disjoint(&pool)?;
    let mut state = FameState::new(pool);
    loop {
        let budget = next_budget(&state, cfg);
        if budget == 0 {
            state.stop_reason = Some(StopReason::PruneLimit);
            break;
        }
        if state.pool.active_count() < 3 {
            state.stop_reason = Some(StopReason::Exhausted);
            break;
        }
        state = iterate(state, neg, cfg, budget)?;
        if let StopDecision::Stop(reason) = check_stop(&state.acc_history, state.pool.pruned_fraction(), cfg)
        {
            state.stop_reason = Some(reason);
            break;
        }
    }
    Ok((state.pool.clone(), state))
}

/// Seeded split of the active set into two halves of row indices.
pub fn cotrain_split(pool: &ClassPool, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx = pool.active_indices();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    idx.shuffle(&mut rng);
    let half = idx.len() / 2;
    let mut a = idx[..half].to_vec();
    let mut b = idx[half..].to_vec();
    a.sort_unstable();
    b.sort_unstable();
    (a, b)
}

/// Fraction of `pool`'s active instances that `model` puts on the positive side.
fn positive_rate(model: &SparseLinearModel, pool: &ClassPool) -> f64 {
    let active = pool.active_indices();
    if active.is_empty() {
        return 0.0;
    }
    let pos = active
        .iter()
        .filter(|&&i| model.decision_unchecked(pool.features().row(i)) > 0.0)
        .count();
    pos as f64 / active.len() as f64
}

/// Co-training variant: the pool is split in two, each half evolves on its
/// own, and each half's stopping rule sees its M1 evaluated on the other
/// half's active set. The halves are merged back at the end.
pub fn fame_cotrain(
    pool: ClassPool,
    neg: &NegativePool,
    cfg: &FameConfig,
) -> Result<(ClassPool, [FameState; 2])> {
    cfg.validate()?;
    neg.check_disjoint(&pool)?;
    if pool.active_count() < 6 {
        return Err(FameError::Argument(format!(
            "co-training needs at least 6 active instances, got {}",
            pool.active_count()
        )));
    }
    let (a, b) = cotrain_split(&pool, cfg.seed);
    let states = cotrain_halves(pool.subset(&a), pool.subset(&b), neg, cfg)?;

    let mut merged = pool;
    let lookup = merged.id_index();
    let removed: Vec<usize> = states
        .iter()
        .flat_map(|s| s.eliminated_ids())
        .map(|id| lookup[&id])
        .collect();
    merged.eliminate(&removed)?;
    Ok((merged, states))
}

/// Runs the two co-training halves to completion.
pub fn cotrain_halves(
    a: ClassPool,
    b: ClassPool,
    neg: &NegativePool,
    cfg: &FameConfig,
) -> Result<[FameState; 2]> {
    let mut states = [FameState::new(a), FameState::new(b)];
    loop {
        let running: Vec<usize> = (0..2).filter(|&h| states[h].stop_reason.is_none()).collect();
        if running.is_empty() {
            break;
        }
        for &h in &running {
            let budget = next_budget(&states[h], cfg);
            if budget == 0 {
                states[h].stop_reason = Some(StopReason::PruneLimit);
            } else if states[h].pool.active_count() < 3 {
                states[h].stop_reason = Some(StopReason::Exhausted);
            } else {
                states[h] = iterate(states[h].clone(), neg, cfg, budget)?;
            }
        }
        // cross-evaluation after both halves have moved
        for &h in &running {
            if states[h].stop_reason.is_some() {
                continue;
            }
            let other = 1 - h;
            let m1 = states[h].last_m1.as_ref().expect("iterated half has a model");
            let acc = positive_rate(m1, &states[other].pool);
            let st = &mut states[h];
            *st.acc_history.last_mut().expect("history is non-empty") = acc;
            st.traces.last_mut().expect("trace is non-empty").stop_accuracy = acc;
            if let StopDecision::Stop(reason) = check_stop(&st.acc_history, st.pool.pruned_fraction(), cfg) {
                st.stop_reason = Some(reason);
            }
        }
    }
    Ok(states)
}
