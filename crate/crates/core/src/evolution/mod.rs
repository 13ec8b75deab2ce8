//! Iterative pruning of a weakly labelled class pool. Each iteration trains
//! M1 (class vs global negatives), splits the pool by M1 confidence, trains
//! M2 (confident half vs the rest) and eliminates the lowest combined scores.

mod config;
mod engine;
mod pool;
mod select;
mod trace;

pub use config::{FameConfig, ScoreCombination, Scoring};
pub use engine::{
    cotrain_halves, cotrain_split, fame_cotrain, fame_iteration, fame_run, FameState, IterationTrace,
};
pub use pool::{ClassPool, NegativePool};
pub use select::{
    aggregate_confidence, check_stop, sample_negatives, select_outliers, select_top_positives, StopDecision,
    StopReason,
};
pub use trace::{parse_trace, write_trace, TRACE_HEADER};
