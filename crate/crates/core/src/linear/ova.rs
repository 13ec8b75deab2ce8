use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{SparseLinearModel, TrainReport};
use super::solver::{binary_labels, train_grafting_svm, SolverOptions};
use crate::error::{FameError, Result};
use crate::features::FeatureMatrix;
use crate::io_util::Cursor;

const MAGIC: &[u8; 8] = b"FAMEOVA1";

/// One binary member per class; prediction is the argmax decision.
#[derive(Debug, Clone, PartialEq)]
pub struct OvaModel {
    classes: Vec<i32>,
    members: Vec<SparseLinearModel>,
}

impl OvaModel {
    pub fn new(classes: Vec<i32>, members: Vec<SparseLinearModel>) -> Result<Self> {
        if classes.is_empty() || classes.len() != members.len() {
            return Err(FameError::Argument(format!(
                "{} classes but {} members",
                classes.len(),
                members.len()
            )));
        }
        let mut sorted = classes.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(FameError::Argument("duplicate class id".into()));
        }
        let dim = members[0].dim();
        if members.iter().any(|m| m.dim() != dim) {
            return Err(FameError::Dimension("members disagree on dimension".into()));
        }
        Ok(OvaModel { classes, members })
    }

    pub fn classes(&self) -> &[i32] {
        &self.classes
    }

    pub fn members(&self) -> &[SparseLinearModel] {
        &self.members
    }

    pub fn dim(&self) -> usize {
        self.members[0].dim()
    }

    /// Member decision values in class order.
    pub fn decisions(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.members.iter().map(|m| m.decision(x)).collect()
    }

    /// Class with the largest decision; ties go to the lowest class id.
    pub fn predict(&self, x: &[f64]) -> Result<i32> {
        let scores = self.decisions(x)?;
        let mut best = 0;
        for i in 1..scores.len() {
            let better = scores[i] > scores[best]
                || (scores[i] == scores[best] && self.classes[i] < self.classes[best]);
            if better {
                best = i;
            }
        }
        Ok(self.classes[best])
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.classes.len() as u32).to_le_bytes());
        for (c, m) in self.classes.iter().zip(&self.members) {
            out.extend_from_slice(&c.to_le_bytes());
            m.write_into(&mut out);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor::new(bytes);
        cur.expect_magic(MAGIC)?;
        let count = cur.u32()? as usize;
        let mut classes = Vec::with_capacity(count.min(1 << 16));
        let mut members = Vec::with_capacity(count.min(1 << 16));
        for _ in 0..count {
            classes.push(cur.i32()?);
            members.push(SparseLinearModel::read_from(&mut cur)?);
        }
        cur.finish()?;
        OvaModel::new(classes, members)
    }
}

/// Trains one grafting SVM per class in ascending class order. Rows with a
/// negative label act as negatives for every member.
pub fn train_ova(
    x: &FeatureMatrix,
    labels: &[i32],
    opts: &SolverOptions,
) -> Result<(OvaModel, Vec<TrainReport>)> {
    let mut classes: Vec<i32> = labels.iter().copied().filter(|&l| l >= 0).collect();
    classes.sort_unstable();
    classes.dedup();
    train_ova_for(x, labels, &classes, opts)
}

/// As [`train_ova`] with an explicit class list; every class must have instances.
pub fn train_ova_for(
    x: &FeatureMatrix,
    labels: &[i32],
    classes: &[i32],
    opts: &SolverOptions,
) -> Result<(OvaModel, Vec<TrainReport>)> {
    if labels.len() != x.n() {
        return Err(FameError::Dimension(format!(
            "{} rows but {} labels",
            x.n(),
            labels.len()
        )));
    }
    let mut classes = classes.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(FameError::Argument("one-vs-all needs at least 2 classes".into()));
    }
    if let Some(c) = classes.iter().find(|c| !labels.contains(c)) {
        return Err(FameError::Argument(format!(
            "class {c} has no training instances"
        )));
    }
    let mut members = Vec::with_capacity(classes.len());
    let mut reports = Vec::with_capacity(classes.len());
    for &c in &classes {
        let (m, r) = train_grafting_svm(x, &binary_labels(labels, c), opts)?;
        members.push(m);
        reports.push(r);
    }
    Ok((OvaModel::new(classes, members)?, reports))
}

/// Fraction of rows whose predicted class equals the label.
pub fn accuracy(model: &OvaModel, x: &FeatureMatrix, labels: &[i32]) -> Result<f64> {
    if x.n() == 0 {
        return Ok(0.0);
    }
    let mut correct = 0;
    for (r, &l) in x.rows().zip(labels) {
        if model.predict(r)? == l {
            correct += 1;
        }
    }
    Ok(correct as f64 / x.n() as f64)
}

/// Fold index per row, stratified by label and shuffled with `seed`.
pub fn stratified_folds(labels: &[i32], folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut classes: Vec<i32> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let mut assignment = vec![0; labels.len()];
    let mut next = 0;
    for c in classes {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            assignment[i] = next % folds;
            next += 1;
        }
    }
    assignment
}

/// Picks lambda from `grid` by k-fold cross-validated OvA accuracy. Ties
/// prefer the larger (sparser) lambda. Returns the choice and per-lambda means.
pub fn select_lambda_cv(
    x: &FeatureMatrix,
    labels: &[i32],
    grid: &[f64],
    folds: usize,
    seed: u64,
    base: &SolverOptions,
) -> Result<(f64, Vec<(f64, f64)>)> {
    if grid.is_empty() || folds < 2 {
        return Err(FameError::Argument("need a non-empty grid and >= 2 folds".into()));
    }
    if grid.len() == 1 {
        return Ok((grid[0], vec![(grid[0], f64::NAN)]));
    }
    let assignment = stratified_folds(labels, folds, seed);
    let mut scores = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let opts = SolverOptions { lambda, ..*base };
        let mut total = 0.0;
        let mut used = 0;
        for f in 0..folds {
            let train: Vec<usize> = (0..x.n()).filter(|&i| assignment[i] != f).collect();
            let test: Vec<usize> = (0..x.n()).filter(|&i| assignment[i] == f).collect();
            if test.is_empty() {
                continue;
            }
            let train_labels: Vec<i32> = train.iter().map(|&i| labels[i]).collect();
            let (model, _) = train_ova(&x.select(&train), &train_labels, &opts)?;
            let test_labels: Vec<i32> = test.iter().map(|&i| labels[i]).collect();
            total += accuracy(&model, &x.select(&test), &test_labels)?;
            used += 1;
        }
        scores.push((lambda, total / used.max(1) as f64));
    }
    let best = scores.iter().fold(scores[0], |b, &s| {
        if s.1 > b.1 || (s.1 == b.1 && s.0 > b.0) {
            s
        } else {
            b
        }
    });
    Ok((best.0, scores))
}
