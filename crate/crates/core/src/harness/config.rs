//! Flat `key = value` configuration.
//!
//! One assignment per line; blank lines and lines starting with `#` are
//! ignored. Unknown keys and repeated keys are errors. Recognized keys and
//! their defaults:
//!
//! ```text
//! seed = 0
//! work_dir = .                     # outputs of every subcommand
//! manifest = manifest.tsv          # relative to the config file
//! image_root =                     # defaults to the manifest's directory
//!
//! k = 64                           # centroids per channel
//! rf = 6                           # square receptive field
//! stride = 1
//! patches = 20000
//! zca_epsilon = 0.5
//! kmeans_iters = 100
//! outlier_rule = high              # high | low | both
//! raw_height = 60
//! lbp_height = 120
//! lbp_neighbors = 16
//! lbp_radius = 2
//! lbp_sigma = 1.0
//!
//! variant = fame-lr                # baseline-raw | fame-m1-only | fame-svm | fame-lr
//! o = 5
//! p_fraction = 0.5
//! max_prune_fraction = 0.10
//! saturation_delta = 0.001
//! negative_sample_size = 0         # 0 uses every negative
//! score_combination = sum_log_odds # sum_log_odds | sum_probability
//! hard_stop_at_limit = true
//! cotrain = false
//! lambda = 1.0                     # M1 and M2
//! solver_tol = 1e-5
//! max_sweeps = 200
//!
//! lambda_grid = 0.03,0.1,0.3,1,3   # one-vs-all, picked by cross-validation
//! cv_folds = 5
//! eval_folds = 0                   # > 1 switches evaluation to k-fold mode
//! sweep_o = 1,5,10
//!
//! synth_classes = 6
//! synth_clean = 270
//! synth_noise = 27
//! synth_dim = 100
//! synth_separation = 6.0
//! synth_overlap = 0.5
//! synth_background_sigma = 1.0
//! synth_negatives = 1000
//! synth_test = 100
//! ```

use std::path::PathBuf;
use std::str::FromStr;

use super::pipeline::Variant;
use super::synth::SyntheticSpec;
use crate::codebook::{CodebookConfig, OutlierRule};
use crate::error::{FameError, Result};
use crate::evolution::{FameConfig, ScoreCombination};
use crate::linear::SolverOptions;

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub seed: u64,
    pub work_dir: PathBuf,
    pub manifest: PathBuf,
    pub image_root: Option<PathBuf>,

    pub k: usize,
    pub rf: usize,
    pub stride: usize,
    pub patches: usize,
    pub zca_epsilon: f64,
    pub kmeans_iters: usize,
    pub outlier_rule: OutlierRule,
    pub raw_height: usize,
    pub lbp_height: usize,
    pub lbp_neighbors: u32,
    pub lbp_radius: f64,
    pub lbp_sigma: f64,

    pub variant: Variant,
    pub o: usize,
    pub p_fraction: f64,
    pub max_prune_fraction: f64,
    pub saturation_delta: f64,
    pub negative_sample_size: usize,
    pub score_combination: ScoreCombination,
    pub hard_stop_at_limit: bool,
    pub cotrain: bool,
    pub lambda: f64,
    pub solver_tol: f64,
    pub max_sweeps: usize,

    pub lambda_grid: Vec<f64>,
    pub cv_folds: usize,
    pub eval_folds: usize,
    pub sweep_o: Vec<usize>,

    pub synth: SyntheticSpec,
}

impl Default for Settings {
    fn default() -> Self {
        let cb = CodebookConfig::default();
        let fame = FameConfig::default();
        let solver = SolverOptions::default();
        Settings {
            seed: 0,
            work_dir: PathBuf::from("."),
            manifest: PathBuf::from("manifest.tsv"),
            image_root: None,
            k: cb.k,
            rf: cb.rf_w,
            stride: cb.stride,
            patches: cb.patches,
            zca_epsilon: cb.zca_epsilon,
            kmeans_iters: cb.kmeans_iters,
            outlier_rule: cb.outlier_rule,
            raw_height: 60,
            lbp_height: 120,
            lbp_neighbors: 16,
            lbp_radius: 2.0,
            lbp_sigma: 1.0,
            variant: Variant::FameLr,
            o: fame.outliers_per_iteration,
            p_fraction: fame.p_fraction,
            max_prune_fraction: fame.max_prune_fraction,
            saturation_delta: fame.saturation_delta,
            negative_sample_size: 0,
            score_combination: fame.score_combination,
            hard_stop_at_limit: fame.hard_stop_at_limit,
            cotrain: false,
            lambda: solver.lambda,
            solver_tol: solver.tol,
            max_sweeps: solver.max_sweeps,
            lambda_grid: vec![0.03, 0.1, 0.3, 1.0, 3.0],
            cv_folds: 5,
            eval_folds: 0,
            sweep_o: vec![1, 5, 10],
            synth: SyntheticSpec::default(),
        }
    }
}

fn value<T: FromStr>(v: &str, line: usize, key: &str) -> Result<T> {
    v.parse()
        .map_err(|_| FameError::line(line, format!("invalid value {v:?} for {key}")))
}

fn list<T: FromStr>(v: &str, line: usize, key: &str) -> Result<Vec<T>> {
    let items = v
        .split(',')
        .map(|s| value(s.trim(), line, key))
        .collect::<Result<Vec<T>>>()?;
    if items.is_empty() {
        return Err(FameError::line(line, format!("{key} must not be empty")));
    }
    Ok(items)
}

fn flag(v: &str, line: usize, key: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(FameError::line(line, format!("invalid boolean {v:?} for {key}"))),
    }
}

fn typed<T: FromStr<Err = FameError>>(v: &str, line: usize) -> Result<T> {
    v.parse()
        .map_err(|e: FameError| FameError::line(line, e.to_string()))
}

impl Settings {
    /// Parses a configuration, starting from the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Settings::default();
        let mut seen = std::collections::HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.trim();
            if body.is_empty() || body.starts_with('#') {
                continue;
            }
            let (key, v) = body
                .split_once('=')
                .ok_or_else(|| FameError::line(line, format!("expected key = value, found {body:?}")))?;
            let (key, v) = (key.trim(), v.trim());
            if let Some(first) = seen.insert(key.to_string(), line) {
                return Err(FameError::line(
                    line,
                    format!("{key} already set on line {first}"),
                ));
            }
            match key {
                "seed" => s.seed = value(v, line, key)?,
                "work_dir" => s.work_dir = PathBuf::from(v),
                "manifest" => s.manifest = PathBuf::from(v),
                "image_root" => s.image_root = (!v.is_empty()).then(|| PathBuf::from(v)),
                "k" => s.k = value(v, line, key)?,
                "rf" => s.rf = value(v, line, key)?,
                "stride" => s.stride = value(v, line, key)?,
                "patches" => s.patches = value(v, line, key)?,
                "zca_epsilon" => s.zca_epsilon = value(v, line, key)?,
                "kmeans_iters" => s.kmeans_iters = value(v, line, key)?,
                "outlier_rule" => s.outlier_rule = typed(v, line)?,
                "raw_height" => s.raw_height = value(v, line, key)?,
                "lbp_height" => s.lbp_height = value(v, line, key)?,
                "lbp_neighbors" => s.lbp_neighbors = value(v, line, key)?,
                "lbp_radius" => s.lbp_radius = value(v, line, key)?,
                "lbp_sigma" => s.lbp_sigma = value(v, line, key)?,
                "variant" => s.variant = typed(v, line)?,
                "o" => s.o = value(v, line, key)?,
                "p_fraction" => s.p_fraction = value(v, line, key)?,
                "max_prune_fraction" => s.max_prune_fraction = value(v, line, key)?,
                "saturation_delta" => s.saturation_delta = value(v, line, key)?,
                "negative_sample_size" => s.negative_sample_size = value(v, line, key)?,
                "score_combination" => s.score_combination = typed(v, line)?,
                "hard_stop_at_limit" => s.hard_stop_at_limit = flag(v, line, key)?,
                "cotrain" => s.cotrain = flag(v, line, key)?,
                "lambda" => s.lambda = value(v, line, key)?,
                "solver_tol" => s.solver_tol = value(v, line, key)?,
                "max_sweeps" => s.max_sweeps = value(v, line, key)?,
                "lambda_grid" => s.lambda_grid = list(v, line, key)?,
                "cv_folds" => s.cv_folds = value(v, line, key)?,
                "eval_folds" => s.eval_folds = value(v, line, key)?,
                "sweep_o" => s.sweep_o = list(v, line, key)?,
                "synth_classes" => s.synth.classes = value(v, line, key)?,
                "synth_clean" => s.synth.clean_per_class = value(v, line, key)?,
                "synth_noise" => s.synth.noise_per_class = value(v, line, key)?,
                "synth_dim" => s.synth.dim = value(v, line, key)?,
                "synth_separation" => s.synth.class_separation = value(v, line, key)?,
                "synth_overlap" => s.synth.noise_overlap = value(v, line, key)?,
                "synth_background_sigma" => s.synth.background_sigma = value(v, line, key)?,
                "synth_negatives" => s.synth.negatives = value(v, line, key)?,
                "synth_test" => s.synth.test_per_class = value(v, line, key)?,
                _ => return Err(FameError::line(line, format!("unknown key {key:?}"))),
            }
        }
        s.set_seed(s.seed);
        s.validate()?;
        Ok(s)
    }

    /// Replaces the seed everywhere it is used.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.synth.seed = seed;
    }

    pub fn validate(&self) -> Result<()> {
        self.fame_config().validate()?;
        self.synth.validate()?;
        if self.k < 2 || self.rf == 0 || self.stride == 0 || self.patches == 0 {
            return Err(FameError::Argument(
                "k >= 2 and positive rf, stride, patches are required".into(),
            ));
        }
        if self.raw_height < self.rf || self.lbp_height < self.rf {
            return Err(FameError::Argument("image heights must be at least rf".into()));
        }
        if self.lambda_grid.iter().any(|&l| !l.is_finite() || l < 0.0)
            || self.lambda.is_nan()
            || self.lambda < 0.0
        {
            return Err(FameError::Argument(
                "lambda values must be finite and >= 0".into(),
            ));
        }
        if self.cv_folds < 2 {
            return Err(FameError::Argument("cv_folds must be >= 2".into()));
        }
        if self.eval_folds == 1 {
            return Err(FameError::Argument("eval_folds must be 0 or >= 2".into()));
        }
        if self.sweep_o.contains(&0) {
            return Err(FameError::Argument("sweep_o values must be >= 1".into()));
        }
        Ok(())
    }

    pub fn solver(&self) -> SolverOptions {
        SolverOptions {
            lambda: self.lambda,
            tol: self.solver_tol,
            max_sweeps: self.max_sweeps,
        }
    }

    /// Evolution settings for the two-model logistic variant; [`Variant`]
    /// adjusts loss and scoring.
    pub fn fame_config(&self) -> FameConfig {
        FameConfig {
            p_fraction: self.p_fraction,
            outliers_per_iteration: self.o,
            max_prune_fraction: self.max_prune_fraction,
            saturation_delta: self.saturation_delta,
            negative_sample_size: (self.negative_sample_size > 0).then_some(self.negative_sample_size),
            score_combination: self.score_combination,
            solver: self.solver(),
            hard_stop_at_limit: self.hard_stop_at_limit,
            seed: self.seed,
            ..FameConfig::default()
        }
    }

    pub fn codebook_config(&self) -> CodebookConfig {
        CodebookConfig {
            k: self.k,
            rf_w: self.rf,
            rf_h: self.rf,
            stride: self.stride,
            patches: self.patches,
            zca_epsilon: self.zca_epsilon,
            kmeans_iters: self.kmeans_iters,
            outlier_rule: self.outlier_rule,
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let s = Settings::parse("").unwrap();
        assert_eq!(s, Settings::default());
        assert_eq!(s.zca_epsilon, 0.5);
        assert_eq!(s.o, 5);
        assert_eq!(s.max_prune_fraction, 0.10);
    }

    #[test]
    fn values_and_comments() {
        let s = Settings::parse(
            "# run\nk = 12\n\nlambda_grid = 0.5, 2\nseed=9\ncotrain = yes\nvariant = fame-svm\n",
        )
        .unwrap();
        assert_eq!(s.k, 12);
        assert_eq!(s.lambda_grid, vec![0.5, 2.0]);
        assert_eq!((s.seed, s.synth.seed), (9, 9));
        assert!(s.cotrain);
        assert_eq!(s.variant, Variant::FameSvm);
    }

    #[test]
    fn errors_carry_line_numbers() {
        for (text, at) in [
            ("k = 3\nbogus = 1\n", 2),
            ("k = 3\nk = 4\n", 2),
            ("\nk\n", 2),
            ("o = -1\n", 1),
            ("outlier_rule = sideways\n", 1),
        ] {
            match Settings::parse(text) {
                Err(FameError::Line { line, .. }) => assert_eq!(line, at, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
        assert!(matches!(Settings::parse("o = 0\n"), Err(FameError::Argument(_))));
    }
}
