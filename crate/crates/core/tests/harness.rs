use std::path::Path;
use std::process::Command;

use fame::codebook::{extract_features, Codebook};
use fame::evolution::{IterationTrace, NegativePool};
use fame::features::FeatureMatrix;
use fame::harness::{
    channel_images, encode_corpus, evaluate, learn_corpus_codebooks, outlier_report, parse_manifest,
    run_kfold, run_prune, synth_generate, Dataset, Settings, SyntheticSpec, Variant,
};
use fame::image::{hflip, GrayImage};
use fame::linear::{train_ova, SolverOptions};
use proptest::prelude::*;

fn small_settings() -> Settings {
    Settings {
        k: 4,
        patches: 400,
        raw_height: 12,
        lbp_height: 16,
        lbp_neighbors: 8,
        lbp_radius: 1.0,
        kmeans_iters: 20,
        ..Settings::default()
    }
}

fn write_corpus(dir: &Path) -> String {
    let face = |seed: usize| {
        GrayImage::from_fn(14, 16, |x, y| {
            ((x * (seed + 3) + y * 7 + seed) % 17) as f64 / 16.0
        })
    };
    for (i, name) in ["a1.pgm", "a2.pgm", "b1.pgm", "neg.pgm", "ta.pgm", "tb.pgm"]
        .iter()
        .enumerate()
    {
        std::fs::write(dir.join(name), face(i).to_pgm()).unwrap();
    }
    std::fs::write(dir.join("broken.pgm"), b"P5 4 4 255\n").unwrap();
    [
        "a1.pgm\talice\tclass_instance",
        "a2.pgm\talice\tclass_instance",
        "b1.pgm\tbob\tclass_instance",
        "broken.pgm\tbob\tclass_instance",
        "neg.pgm\t\tglobal_negative",
        "ta.pgm\talice\ttest",
        "tb.pgm\tbob\ttest",
    ]
    .join("\n")
}

#[test]
fn encode_expands_training_images_only() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = parse_manifest(&write_corpus(dir.path())).unwrap();
    let s = small_settings();
    let (raw, lbp, failures) = learn_corpus_codebooks(&manifest, dir.path(), &s).unwrap();
    assert_eq!(failures.len(), 1);
    assert_eq!(failures[0].0, "broken.pgm");

    let corpus = encode_corpus(&manifest, dir.path(), &raw, &lbp, &s).unwrap();
    assert_eq!(corpus.classes, vec!["alice".to_string(), "bob".to_string()]);
    assert_eq!(corpus.train.n(), 6);
    assert_eq!(corpus.train.labels(), &[0, 0, 0, 0, 1, 1]);
    assert_eq!(corpus.negatives.n(), 2);
    assert_eq!(corpus.test.n(), 2);
    assert_eq!(corpus.train.dim(), 40);
    assert_eq!(corpus.failures.len(), 1);
    assert!(corpus.test_sources.iter().all(|s| !s.flipped));
    assert_eq!(corpus.train_sources.iter().filter(|s| s.flipped).count(), 3);

    // the mirrored row is the encoding of the mirrored picture
    let img = fame::image::load_pgm(&std::fs::read(dir.path().join("a1.pgm")).unwrap()).unwrap();
    let (r, l) = channel_images(&hflip(&img), &s).unwrap();
    assert_eq!(
        corpus.train.row(1),
        extract_features(&r, &l, &raw, &lbp).unwrap().as_slice()
    );

    let again = encode_corpus(&manifest, dir.path(), &raw, &lbp, &s).unwrap();
    assert_eq!(again.train.to_bytes(), corpus.train.to_bytes());
    assert_eq!(again.test.to_bytes(), corpus.test.to_bytes());
    let (raw2, _, _) = learn_corpus_codebooks(&manifest, dir.path(), &s).unwrap();
    assert_eq!(raw2.to_bytes(), raw.to_bytes());
    assert_eq!(Codebook::from_bytes(&raw.to_bytes()).unwrap().k(), 4);
}

fn small_spec(seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        classes: 3,
        clean_per_class: 40,
        noise_per_class: 4,
        dim: 12,
        negatives: 120,
        test_per_class: 20,
        seed,
        ..SyntheticSpec::default()
    }
}

#[test]
fn prune_respects_the_limit_for_every_variant() {
    let data = Dataset::from(synth_generate(&small_spec(1)).unwrap());
    let s = Settings::default();
    for variant in Variant::ALL {
        let out = run_prune(&data.pools, &data.negatives, variant, &s).unwrap();
        for (pool, elim) in out.pools.iter().zip(out.eliminated()) {
            if variant == Variant::BaselineRaw {
                assert!(elim.is_empty());
            } else {
                assert_eq!(elim.len(), 5, "{variant:?}");
            }
            assert_eq!(pool.eliminated_count(), elim.len());
        }
    }
    let cot = Settings {
        cotrain: true,
        ..Settings::default()
    };
    let out = run_prune(&data.pools, &data.negatives, Variant::FameLr, &cot).unwrap();
    assert!(out.states.iter().all(|s| s.len() == 2));
    // each half prunes to its own floor: ceil(0.1 * 22) twice
    assert!(out.eliminated().iter().all(|e| e.len() == 6));
}

#[test]
fn kfold_covers_every_instance_once() {
    let data = Dataset::from(synth_generate(&small_spec(2)).unwrap());
    let s = Settings {
        lambda_grid: vec![0.3],
        ..Settings::default()
    };
    let report = run_kfold(&data, Variant::FameLr, &s, 5).unwrap();
    assert_eq!(report.folds.len(), 5);
    let total: usize = report
        .folds
        .iter()
        .map(|r| (0..r.test_classes.len()).map(|i| r.test_count(i)).sum::<usize>())
        .sum();
    assert_eq!(total, 3 * 44);
    let mean = report.folds.iter().map(|r| r.macro_accuracy).sum::<f64>() / 5.0;
    assert!((mean - report.mean_macro_accuracy).abs() < 1e-12);
    assert!(report
        .to_csv()
        .starts_with("fold,macro_accuracy,overall_accuracy\n0,"));
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fame"))
}

fn run(args: &[&str], config: &Path) -> i32 {
    let out = bin().args(args).arg("--config").arg(config).output().unwrap();
    out.status.code().unwrap()
}

const SMALL_CONFIG: &str = "\
work_dir = out
synth_classes = 3
synth_clean = 40
synth_noise = 4
synth_dim = 12
synth_negatives = 120
synth_test = 20
lambda_grid = 0.3,1
cv_folds = 3
sweep_o = 1,5
";

#[test]
fn cli_runs_every_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, SMALL_CONFIG).unwrap();
    for cmd in ["synth", "prune", "train", "predict", "eval", "report"] {
        assert_eq!(run(&[cmd, "--seed", "3"], &cfg), 0, "{cmd}");
    }
    let out = dir.path().join("out");
    for f in [
        "train.fmx",
        "planted.tsv",
        "traces/fame-lr/class_0.tsv",
        "kept_fame-lr.tsv",
        "model_fame-lr.ova",
        "predictions_fame-lr.csv",
        "metrics_fame-lr.csv",
        "confusion_fame-lr.csv",
        "outliers_fame-lr.csv",
        "sweep_outliers.csv",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    let predictions = std::fs::read_to_string(out.join("predictions_fame-lr.csv")).unwrap();
    assert_eq!(predictions.lines().count(), 1 + 60);

    assert_eq!(run(&["prune", "--variant", "fame-svm"], &cfg), 0);
    assert!(out.join("traces/fame-svm/class_2.tsv").exists());
}

#[test]
fn cli_image_commands() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("manifest.tsv"), write_corpus(dir.path())).unwrap();
    let cfg = dir.path().join("img.cfg");
    std::fs::write(
        &cfg,
        "k = 4\npatches = 300\nraw_height = 12\nlbp_height = 16\nlbp_neighbors = 8\nlbp_radius = 1\nkmeans_iters = 10\nwork_dir = out\n",
    )
    .unwrap();
    assert_eq!(run(&["codebook"], &cfg), 0);
    assert_eq!(run(&["encode"], &cfg), 0);
    let out = dir.path().join("out");
    let train = FeatureMatrix::from_bytes(&std::fs::read(out.join("train.fmx")).unwrap()).unwrap();
    assert_eq!((train.n(), train.dim()), (6, 40));
    let failures = std::fs::read_to_string(out.join("encode_failures.tsv")).unwrap();
    assert!(failures.contains("broken.pgm"));
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.cfg");
    assert_eq!(run(&["synth"], &missing), 3);

    let bad_key = dir.path().join("bad.cfg");
    std::fs::write(&bad_key, "colour = blue\n").unwrap();
    assert_eq!(run(&["synth"], &bad_key), 2);

    let bad_value = dir.path().join("zero.cfg");
    std::fs::write(&bad_value, "o = 0\n").unwrap();
    assert_eq!(run(&["prune"], &bad_value), 2);

    // prune before synth: the feature files are missing
    let empty = dir.path().join("empty.cfg");
    std::fs::write(&empty, "work_dir = nowhere\n").unwrap();
    assert_eq!(run(&["prune"], &empty), 3);

    let usage = bin().arg("frobnicate").output().unwrap();
    assert_eq!(usage.status.code(), Some(2));
}

fn trace(iteration: usize, outliers: Vec<u64>) -> IterationTrace {
    IterationTrace {
        iteration,
        m1_accuracy: 1.0,
        stop_accuracy: 1.0,
        cplus: vec![],
        cminus: vec![],
        outliers,
        scores_m1: vec![],
        scores_m2: vec![],
        aggregated: vec![],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn outlier_counts_are_cumulative(
        picks in prop::collection::vec(prop::collection::vec(0u64..40, 0..5), 1..8),
        truth in prop::collection::hash_set(0u64..40, 0..15),
    ) {
        // keep each id once, in first-seen order
        let mut seen = std::collections::HashSet::new();
        let traces: Vec<IterationTrace> = picks
            .into_iter()
            .enumerate()
            .map(|(t, ids)| trace(t + 1, ids.into_iter().filter(|i| seen.insert(*i)).collect()))
            .collect();
        let pool: Vec<u64> = (0..40).collect();
        let truth: Vec<u64> = truth.into_iter().collect();
        let rows = outlier_report(&traces, &pool, Some(&truth)).unwrap();
        let total: usize = traces.iter().map(|t| t.outliers.len()).sum();
        let mut prev = (0, 0);
        for r in &rows {
            let (c, f) = (r.correct.unwrap(), r.false_detections.unwrap());
            prop_assert!(r.eliminated >= prev.0 + prev.1 && c >= prev.0 && f >= prev.1);
            prop_assert_eq!(c + f, r.eliminated);
            prop_assert!(r.eliminated <= total);
            prev = (c, f);
        }
        let all: Vec<u64> = traces.iter().flat_map(|t| t.outliers.clone()).collect();
        prop_assert_eq!(prev.0, all.iter().filter(|i| truth.contains(i)).count());
    }

    #[test]
    fn confusion_rows_sum_to_test_counts(seed in 0u64..200) {
        let spec = SyntheticSpec { classes: 3, clean_per_class: 15, noise_per_class: 3, dim: 6, negatives: 10, test_per_class: 7, seed, class_separation: 2.0, ..SyntheticSpec::default() };
        let data = Dataset::from(synth_generate(&spec).unwrap());
        let train = data.train_matrix();
        let (model, _) = train_ova(&train, train.labels(), &SolverOptions::with_lambda(0.5)).unwrap();
        let r = evaluate(&model, &data.test).unwrap();
        for i in 0..r.test_classes.len() {
            prop_assert_eq!(r.confusion[i].iter().sum::<usize>(), 7);
            prop_assert_eq!(r.per_class_accuracy[i], r.correct(i) as f64 / 7.0);
        }
        let mean = r.per_class_accuracy.iter().sum::<f64>() / r.per_class_accuracy.len() as f64;
        prop_assert!((r.macro_accuracy - mean).abs() <= 1e-12);
    }
}

#[test]
fn dataset_ids_follow_rows() {
    let train = FeatureMatrix::from_rows(&[[0.0], [1.0], [2.0]], vec![1, 0, 1]).unwrap();
    let negatives = FeatureMatrix::from_rows(&[[5.0], [6.0]], vec![-1, -1]).unwrap();
    let test = FeatureMatrix::from_rows(&[[0.5]], vec![0]).unwrap();
    let data = Dataset::from_matrices(&train, negatives, test).unwrap();
    assert_eq!(data.classes, vec![0, 1]);
    assert_eq!(data.pools[0].source_ids(), &[1]);
    assert_eq!(data.pools[1].source_ids(), &[0, 2]);
    let neg: &NegativePool = &data.negatives;
    assert_eq!(neg.source_ids(), &[3, 4]);
}
