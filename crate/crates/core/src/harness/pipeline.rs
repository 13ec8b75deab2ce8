use std::path::Path;

use log::{info, warn};

use super::config::Settings;
use super::manifest::{Manifest, Role};
use super::metrics::{evaluate, outlier_report, MetricsReport, SweepRow};
use super::synth::SyntheticData;
use crate::codebook::{extract_features, learn_codebook, Channel, Codebook};
use crate::error::{FameError, Result};
use crate::evolution::{fame_cotrain, fame_run, ClassPool, FameConfig, FameState, NegativePool, Scoring};
use crate::features::{FeatureMatrix, NEGATIVE_LABEL};
use crate::image::{hflip, lbp_encode, lbp_to_gray, load_pgm, resize_bilinear, GrayImage};
use crate::linear::{select_lambda_cv, stratified_folds, train_ova, Loss, OvaModel, SolverOptions};

/// Which training set the final classifier sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Every weakly labelled instance, no pruning.
    BaselineRaw,
    /// Pruned by the lowest first-model decisions only.
    FameM1Only,
    /// Two-model pruning with squared-hinge models.
    FameSvm,
    /// Two-model pruning with L1 logistic models.
    FameLr,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::BaselineRaw,
        Variant::FameM1Only,
        Variant::FameSvm,
        Variant::FameLr,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::BaselineRaw => "baseline-raw",
            Variant::FameM1Only => "fame-m1-only",
            Variant::FameSvm => "fame-svm",
            Variant::FameLr => "fame-lr",
        }
    }

    /// Evolution settings for this variant, `None` for the unpruned baseline.
    pub fn fame_config(self, base: &FameConfig) -> Option<FameConfig> {
        let (loss, scoring) = match self {
            Variant::BaselineRaw => return None,
            Variant::FameM1Only => (Loss::Logistic, Scoring::M1Only),
            Variant::FameSvm => (Loss::SquaredHinge, Scoring::TwoModel),
            Variant::FameLr => (Loss::Logistic, Scoring::TwoModel),
        };
        Some(FameConfig {
            loss,
            scoring,
            ..base.clone()
        })
    }
}

impl std::str::FromStr for Variant {
    type Err = FameError;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| FameError::Argument(format!("unknown variant {s:?}")))
    }
}

/// Weakly labelled class pools, the shared negatives and a labelled test set.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Class id per pool, ascending.
    pub classes: Vec<i32>,
    pub pools: Vec<ClassPool>,
    pub negatives: NegativePool,
    pub test: FeatureMatrix,
    /// Planted noise ids per pool, when known.
    pub planted: Option<Vec<Vec<u64>>>,
}

impl Dataset {
    /// Splits `train` into one pool per label. Source ids are row indices of
    /// `train`, then `train.n() + row` for the negatives.
    pub fn from_matrices(
        train: &FeatureMatrix,
        negatives: FeatureMatrix,
        test: FeatureMatrix,
    ) -> Result<Self> {
        if negatives.dim() != train.dim() || (test.n() > 0 && test.dim() != train.dim()) {
            return Err(FameError::Dimension(
                "train, negative and test features differ in dimension".into(),
            ));
        }
        let classes = train.classes();
        let pools = classes
            .iter()
            .map(|&c| {
                let rows: Vec<usize> = (0..train.n()).filter(|&i| train.label(i) == c).collect();
                ClassPool::new(train.select(&rows), rows.iter().map(|&i| i as u64).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        let offset = train.n() as u64;
        let ids = (0..negatives.n() as u64).map(|i| offset + i).collect();
        Ok(Dataset {
            classes,
            pools,
            negatives: NegativePool::new(negatives, ids)?,
            test,
            planted: None,
        })
    }

    /// All pool rows stacked in class order, labelled with their class.
    pub fn train_matrix(&self) -> FeatureMatrix {
        stack_pools(&self.pools, false)
    }
}

impl From<SyntheticData> for Dataset {
    fn from(d: SyntheticData) -> Self {
        Dataset {
            classes: (0..d.pools.len() as i32).collect(),
            pools: d.pools,
            negatives: d.negatives,
            test: d.test,
            planted: Some(d.planted),
        }
    }
}

fn stack_pools(pools: &[ClassPool], active_only: bool) -> FeatureMatrix {
    let dim = pools.first().map_or(0, |p| p.features().dim());
    let mut out = FeatureMatrix::empty(dim);
    for p in pools {
        for i in 0..p.m() {
            if !active_only || p.is_active(i) {
                out.push_row(p.features().row(i), p.features().label(i))
                    .expect("pools share a dimension");
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruneOutcome {
    pub variant: Variant,
    /// Pools with eliminations applied.
    pub pools: Vec<ClassPool>,
    /// Evolution states per class: one, or two with co-training, none for the baseline.
    pub states: Vec<Vec<FameState>>,
}

impl PruneOutcome {
    /// Eliminated ids per class in elimination order.
    pub fn eliminated(&self) -> Vec<Vec<u64>> {
        self.states
            .iter()
            .map(|s| s.iter().flat_map(|st| st.eliminated_ids()).collect())
            .collect()
    }
}

/// Prunes each class pool independently.
pub fn run_prune(
    pools: &[ClassPool],
    negatives: &NegativePool,
    variant: Variant,
    settings: &Settings,
) -> Result<PruneOutcome> {
    let Some(cfg) = variant.fame_config(&settings.fame_config()) else {
        return Ok(PruneOutcome {
            variant,
            pools: pools.to_vec(),
            states: vec![Vec::new(); pools.len()],
        });
    };
    let mut out_pools = Vec::with_capacity(pools.len());
    let mut states = Vec::with_capacity(pools.len());
    for (c, pool) in pools.iter().enumerate() {
        let (pruned, st) = if settings.cotrain {
            let (p, [a, b]) = fame_cotrain(pool.clone(), negatives, &cfg)?;
            (p, vec![a, b])
        } else {
            let (p, s) = fame_run(pool.clone(), negatives, &cfg)?;
            (p, vec![s])
        };
        info!(
            "{} class pool {c}: kept {} of {}, stop {:?}",
            variant.as_str(),
            pruned.active_count(),
            pruned.m(),
            st.iter().map(|s| s.stop_reason).collect::<Vec<_>>()
        );
        out_pools.push(pruned);
        states.push(st);
    }
    Ok(PruneOutcome {
        variant,
        pools: out_pools,
        states,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub model: OvaModel,
    pub lambda: f64,
    /// Mean cross-validated accuracy per grid value (NaN when the grid has one entry).
    pub cv: Vec<(f64, f64)>,
}

impl TrainedModel {
    pub fn cv_csv(&self) -> String {
        let mut out = String::from("lambda,cv_accuracy,selected\n");
        for (l, a) in &self.cv {
            let acc = if a.is_nan() { String::new() } else { a.to_string() };
            out.push_str(&format!("{l},{acc},{}\n", u8::from(*l == self.lambda)));
        }
        out
    }
}

/// One-vs-all on the active instances of `pools`, lambda chosen by cross-validation.
pub fn train_on_pools(pools: &[ClassPool], settings: &Settings) -> Result<TrainedModel> {
    let x = stack_pools(pools, true);
    let labels = x.labels().to_vec();
    let base = SolverOptions {
        tol: settings.solver_tol,
        max_sweeps: settings.max_sweeps,
        ..SolverOptions::default()
    };
    let (lambda, cv) = select_lambda_cv(
        &x,
        &labels,
        &settings.lambda_grid,
        settings.cv_folds,
        settings.seed,
        &base,
    )?;
    let (model, _) = train_ova(&x, &labels, &SolverOptions { lambda, ..base })?;
    Ok(TrainedModel { model, lambda, cv })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutcome {
    pub prune: PruneOutcome,
    pub trained: TrainedModel,
    pub report: MetricsReport,
}

/// Prune (unless baseline), train and score on the dataset's test split.
pub fn run_train_eval(data: &Dataset, variant: Variant, settings: &Settings) -> Result<EvalOutcome> {
    let prune = run_prune(&data.pools, &data.negatives, variant, settings)?;
    let trained = train_on_pools(&prune.pools, settings)?;
    let report = evaluate(&trained.model, &data.test)?;
    Ok(EvalOutcome {
        prune,
        trained,
        report,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KFoldReport {
    pub folds: Vec<MetricsReport>,
    pub mean_macro_accuracy: f64,
}

impl KFoldReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fold,macro_accuracy,overall_accuracy\n");
        for (f, r) in self.folds.iter().enumerate() {
            out.push_str(&format!("{f},{},{}\n", r.macro_accuracy, r.overall_accuracy));
        }
        out.push_str(&format!("mean,{},\n", self.mean_macro_accuracy));
        out
    }
}

/// Stratified k-fold over the pools themselves: each fold is pruned and
/// trained on the remaining folds and scored against its weak labels.
pub fn run_kfold(data: &Dataset, variant: Variant, settings: &Settings, k: usize) -> Result<KFoldReport> {
    if k < 2 {
        return Err(FameError::Argument("k-fold evaluation needs k >= 2".into()));
    }
    let all = data.train_matrix();
    let fold_of = stratified_folds(all.labels(), k, settings.seed);
    let mut folds = Vec::with_capacity(k);
    for f in 0..k {
        let mut offset = 0;
        let mut train_pools = Vec::with_capacity(data.pools.len());
        let mut test_rows = Vec::new();
        for p in &data.pools {
            let keep: Vec<usize> = (0..p.m()).filter(|&i| fold_of[offset + i] != f).collect();
            test_rows.extend(
                (0..p.m())
                    .filter(|&i| fold_of[offset + i] == f)
                    .map(|i| offset + i),
            );
            train_pools.push(p.subset(&keep));
            offset += p.m();
        }
        let prune = run_prune(&train_pools, &data.negatives, variant, settings)?;
        let trained = train_on_pools(&prune.pools, settings)?;
        folds.push(evaluate(&trained.model, &all.select(&test_rows))?);
    }
    let mean_macro_accuracy = folds.iter().map(|r| r.macro_accuracy).sum::<f64>() / k as f64;
    Ok(KFoldReport {
        folds,
        mean_macro_accuracy,
    })
}

/// Runs the configured variant once per `o` and reports cumulative
/// correct/false eliminations per class and iteration.
pub fn outlier_sweep(data: &Dataset, settings: &Settings, o_values: &[usize]) -> Result<Vec<SweepRow>> {
    if settings.variant == Variant::BaselineRaw {
        return Err(FameError::Argument(
            "the outlier sweep needs a pruning variant".into(),
        ));
    }
    let mut rows = Vec::new();
    for &o in o_values {
        let s = Settings {
            o,
            ..settings.clone()
        };
        let prune = run_prune(&data.pools, &data.negatives, settings.variant, &s)?;
        for (c, states) in prune.states.iter().enumerate() {
            let traces: Vec<_> = states.iter().flat_map(|st| st.traces.iter().cloned()).collect();
            let truth = data.planted.as_ref().map(|p| p[c].as_slice());
            for r in outlier_report(&traces, data.pools[c].source_ids(), truth)? {
                rows.push((o, data.classes[c], r));
            }
        }
    }
    Ok(rows)
}

/// Raw-channel and LBP-channel images for one decoded picture.
pub fn channel_images(img: &GrayImage, settings: &Settings) -> Result<(GrayImage, GrayImage)> {
    let raw = resize_bilinear(img, settings.raw_height)?;
    let src = resize_bilinear(img, settings.lbp_height)?;
    let lbp = lbp_encode(&src, settings.lbp_neighbors, settings.lbp_radius)?;
    Ok((raw, lbp_to_gray(&lbp, settings.lbp_sigma)?))
}

fn read_image(root: &Path, rel: &str) -> Result<GrayImage> {
    let path = root.join(rel);
    let bytes = std::fs::read(&path).map_err(|e| FameError::io(&path, e))?;
    load_pgm(&bytes)
}

/// Path and reason for each image that could not be used.
pub type Skipped = Vec<(String, String)>;

/// Learns the raw and LBP codebooks from the training-role images.
/// Unreadable images are skipped and returned with the reason.
pub fn learn_corpus_codebooks(
    manifest: &Manifest,
    root: &Path,
    settings: &Settings,
) -> Result<(Codebook, Codebook, Skipped)> {
    let mut raw = Vec::new();
    let mut lbp = Vec::new();
    let mut failures = Vec::new();
    for rec in manifest.records.iter().filter(|r| r.role.is_training()) {
        match read_image(root, &rec.path).and_then(|img| channel_images(&img, settings)) {
            Ok((r, l)) => {
                raw.push(r);
                lbp.push(l);
            }
            Err(e) => {
                warn!("skipping {}: {e}", rec.path);
                failures.push((rec.path.clone(), e.to_string()));
            }
        }
    }
    if raw.is_empty() {
        return Err(FameError::Argument("no readable training images".into()));
    }
    let cfg = settings.codebook_config();
    let cb_raw = learn_codebook(&raw, Channel::Raw, &cfg)?;
    let cb_lbp = learn_codebook(
        &lbp,
        Channel::Lbp,
        &crate::codebook::CodebookConfig {
            seed: cfg.seed.wrapping_add(1 << 32),
            ..cfg.clone()
        },
    )?;
    Ok((cb_raw, cb_lbp, failures))
}

/// Where an encoded row came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowSource {
    pub path: String,
    pub flipped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedCorpus {
    /// Class names; a row's label indexes this list.
    pub classes: Vec<String>,
    pub train: FeatureMatrix,
    pub train_sources: Vec<RowSource>,
    pub negatives: FeatureMatrix,
    pub negative_sources: Vec<RowSource>,
    pub test: FeatureMatrix,
    pub test_sources: Vec<RowSource>,
    pub failures: Skipped,
}

/// Encodes every manifest image. Training-role images also emit their mirror image.
pub fn encode_corpus(
    manifest: &Manifest,
    root: &Path,
    cb_raw: &Codebook,
    cb_lbp: &Codebook,
    settings: &Settings,
) -> Result<EncodedCorpus> {
    let dim = 2 * crate::codebook::POOL_REGIONS * cb_raw.k();
    if cb_lbp.k() != cb_raw.k() {
        return Err(FameError::Dimension("raw and LBP codebooks differ in K".into()));
    }
    let classes = manifest.class_names();
    let mut out = EncodedCorpus {
        classes: classes.clone(),
        train: FeatureMatrix::empty(dim),
        train_sources: Vec::new(),
        negatives: FeatureMatrix::empty(dim),
        negative_sources: Vec::new(),
        test: FeatureMatrix::empty(dim),
        test_sources: Vec::new(),
        failures: Vec::new(),
    };
    for rec in &manifest.records {
        let label = match rec.role {
            Role::GlobalNegative => NEGATIVE_LABEL,
            _ => classes.binary_search(&rec.label).expect("label is listed") as i32,
        };
        let encode = |img: &GrayImage| -> Result<Vec<f64>> {
            let (raw, lbp) = channel_images(img, settings)?;
            extract_features(&raw, &lbp, cb_raw, cb_lbp)
        };
        let rows = read_image(root, &rec.path).and_then(|img| {
            let mut rows = vec![(encode(&img)?, false)];
            if rec.role.is_training() {
                rows.push((encode(&hflip(&img))?, true));
            }
            Ok(rows)
        });
        let rows = match rows {
            Ok(r) => r,
            Err(e) => {
                warn!("skipping {}: {e}", rec.path);
                out.failures.push((rec.path.clone(), e.to_string()));
                continue;
            }
        };
        let (matrix, sources) = match rec.role {
            Role::ClassInstance => (&mut out.train, &mut out.train_sources),
            Role::GlobalNegative => (&mut out.negatives, &mut out.negative_sources),
            Role::Test => (&mut out.test, &mut out.test_sources),
        };
        for (row, flipped) in rows {
            matrix.push_row(&row, label)?;
            sources.push(RowSource {
                path: rec.path.clone(),
                flipped,
            });
        }
    }
    Ok(out)
}
