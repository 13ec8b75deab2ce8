use crate::error::{FameError, Result};
use crate::linear::{Loss, SolverOptions};

/// How the first- and second-model scores of a candidate are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScoreCombination {
    /// Sum of raw decision values.
    #[default]
    SumLogOdds,
    /// Sum of sigmoid probabilities.
    SumProbability,
}

impl std::str::FromStr for ScoreCombination {
    type Err = FameError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum_log_odds" => Ok(ScoreCombination::SumLogOdds),
            "sum_probability" => Ok(ScoreCombination::SumProbability),
            _ => Err(FameError::Argument(format!("unknown score combination {s:?}"))),
        }
    }
}

/// Which models decide the eliminations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scoring {
    /// M1 splits the pool, M2 separates the split, combined scores pick outliers.
    #[default]
    TwoModel,
    /// Outliers are the active instances with the lowest M1 decision; no M2.
    M1Only,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FameConfig {
    /// Fraction of the active set kept as candidate positives.
    pub p_fraction: f64,
    /// Instances eliminated per iteration.
    pub outliers_per_iteration: usize,
    pub max_prune_fraction: f64,
    pub saturation_delta: f64,
    /// Negatives drawn per iteration; `None` uses the whole pool.
    pub negative_sample_size: Option<usize>,
    pub score_combination: ScoreCombination,
    pub scoring: Scoring,
    /// Loss for M1 and M2.
    pub loss: Loss,
    /// Shared by M1 and M2.
    pub solver: SolverOptions,
    /// Stop as soon as `max_prune_fraction` is reached, and never prune past it.
    pub hard_stop_at_limit: bool,
    pub seed: u64,
}

impl Default for FameConfig {
    fn default() -> Self {
        FameConfig {
            p_fraction: 0.5,
            outliers_per_iteration: 5,
            max_prune_fraction: 0.10,
            saturation_delta: 0.001,
            negative_sample_size: None,
            score_combination: ScoreCombination::SumLogOdds,
            scoring: Scoring::TwoModel,
            loss: Loss::Logistic,
            solver: SolverOptions::default(),
            hard_stop_at_limit: true,
            seed: 0,
        }
    }
}

impl FameConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_fraction > 0.0 && self.p_fraction < 1.0) {
            return Err(FameError::Argument(format!(
                "p_fraction must be in (0, 1), got {}",
                self.p_fraction
            )));
        }
        if self.outliers_per_iteration == 0 {
            return Err(FameError::Argument(
                "at least one outlier must be removed per iteration".into(),
            ));
        }
        if !(self.max_prune_fraction > 0.0 && self.max_prune_fraction <= 1.0) {
            return Err(FameError::Argument(format!(
                "max_prune_fraction must be in (0, 1], got {}",
                self.max_prune_fraction
            )));
        }
        if self.negative_sample_size == Some(0) {
            return Err(FameError::Argument("negative sample size must be >= 1".into()));
        }
        Ok(())
    }

    /// Number of eliminations that reaches the prune limit on a pool of `m`.
    pub fn prune_target(&self, m: usize) -> usize {
        (self.max_prune_fraction * m as f64 - 1e-9).ceil().max(0.0) as usize
    }
}
