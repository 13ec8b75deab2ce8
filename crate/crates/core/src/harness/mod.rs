//! End-to-end orchestration: manifests, configuration, the synthetic
//! controlled experiment, training/evaluation and report files.

pub mod commands;
mod config;
mod manifest;
mod metrics;
mod pipeline;
mod synth;

pub use config::Settings;
pub use manifest::{parse_manifest, Manifest, ManifestRecord, Role};
pub use metrics::{evaluate, outlier_csv, outlier_report, sweep_csv, MetricsReport, OutlierCounts, SweepRow};
pub use pipeline::{
    channel_images, encode_corpus, learn_corpus_codebooks, outlier_sweep, run_kfold, run_prune,
    run_train_eval, train_on_pools, Dataset, EncodedCorpus, EvalOutcome, KFoldReport, PruneOutcome,
    RowSource, Skipped, TrainedModel, Variant,
};
pub use synth::{synth_generate, SyntheticData, SyntheticSpec};
