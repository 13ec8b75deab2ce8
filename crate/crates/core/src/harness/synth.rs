use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{FameError, Result};
use crate::evolution::{ClassPool, NegativePool};
use crate::features::{FeatureMatrix, NEGATIVE_LABEL};

/// Controlled weak-label fixture: clean Gaussian classes, planted noise and a
/// background negative pool. Clean instances have unit variance per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub classes: usize,
    pub clean_per_class: usize,
    pub noise_per_class: usize,
    pub dim: usize,
    /// Distance between any two class centers, in clean-instance standard deviations.
    pub class_separation: f64,
    /// Probability that a noise instance comes from another class instead of the background.
    pub noise_overlap: f64,
    /// Standard deviation of the background Gaussian, centered at the origin.
    pub background_sigma: f64,
    pub negatives: usize,
    /// Clean held-out instances per class.
    pub test_per_class: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            classes: 6,
            clean_per_class: 270,
            noise_per_class: 27,
            dim: 100,
            class_separation: 6.0,
            noise_overlap: 0.5,
            background_sigma: 1.0,
            negatives: 1000,
            test_per_class: 100,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.classes == 0 || self.clean_per_class == 0 {
            return Err(FameError::Argument(
                "need at least one class with clean instances".into(),
            ));
        }
        if self.dim < self.classes {
            return Err(FameError::Argument(format!(
                "dim {} cannot hold {} orthogonal class centers",
                self.dim, self.classes
            )));
        }
        if !(self.class_separation >= 0.0 && self.class_separation.is_finite()) {
            return Err(FameError::Argument(
                "class_separation must be finite and >= 0".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.noise_overlap) {
            return Err(FameError::Argument("noise_overlap must be in [0, 1]".into()));
        }
        if self.noise_overlap > 0.0 && self.noise_per_class > 0 && self.classes < 2 {
            return Err(FameError::Argument(
                "overlapping noise needs a second class".into(),
            ));
        }
        if !(self.background_sigma > 0.0 && self.background_sigma.is_finite()) {
            return Err(FameError::Argument("background_sigma must be positive".into()));
        }
        if self.negatives == 0 {
            return Err(FameError::Argument("negative pool must not be empty".into()));
        }
        Ok(())
    }

    /// Instances per class pool.
    pub fn pool_size(&self) -> usize {
        self.clean_per_class + self.noise_per_class
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    /// One pool per class; pool `c` carries weak label `c`.
    pub pools: Vec<ClassPool>,
    pub negatives: NegativePool,
    /// Planted noise ids per class, ascending.
    pub planted: Vec<Vec<u64>>,
    /// Clean held-out instances labelled with their true class.
    pub test: FeatureMatrix,
    /// Class centers, row per class.
    pub centers: Vec<Vec<f64>>,
}

fn gaussian(rng: &mut ChaCha8Rng, center: &[f64], sigma: f64) -> Vec<f64> {
    center
        .iter()
        .map(|&c| {
            let z: f64 = StandardNormal.sample(rng);
            c + sigma * z
        })
        .collect()
}

/// Generates the fixture. Source ids are unique across all pools and the
/// negatives: pools first in class order, then negatives.
pub fn synth_generate(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut axes: Vec<usize> = (0..spec.dim).collect();
    axes.shuffle(&mut rng);
    let radius = spec.class_separation / std::f64::consts::SQRT_2;
    let centers: Vec<Vec<f64>> = (0..spec.classes)
        .map(|c| {
            let mut v = vec![0.0; spec.dim];
            v[axes[c]] = radius;
            v
        })
        .collect();
    let origin = vec![0.0; spec.dim];

    let mut next_id = 0u64;
    let mut pools = Vec::with_capacity(spec.classes);
    let mut planted = Vec::with_capacity(spec.classes);
    for c in 0..spec.classes {
        let mut rows: Vec<(Vec<f64>, bool)> = Vec::with_capacity(spec.pool_size());
        for _ in 0..spec.clean_per_class {
            rows.push((gaussian(&mut rng, &centers[c], 1.0), false));
        }
        for _ in 0..spec.noise_per_class {
            let row = if rng.random::<f64>() < spec.noise_overlap {
                let mut other = rng.random_range(0..spec.classes - 1);
                if other >= c {
                    other += 1;
                }
                gaussian(&mut rng, &centers[other], 1.0)
            } else {
                gaussian(&mut rng, &origin, spec.background_sigma)
            };
            rows.push((row, true));
        }
        rows.shuffle(&mut rng);
        let ids: Vec<u64> = (next_id..next_id + rows.len() as u64).collect();
        next_id += rows.len() as u64;
        planted.push(
            ids.iter()
                .zip(&rows)
                .filter(|(_, r)| r.1)
                .map(|(&id, _)| id)
                .collect(),
        );
        let values: Vec<&Vec<f64>> = rows.iter().map(|r| &r.0).collect();
        let features = FeatureMatrix::from_rows(&values, vec![c as i32; rows.len()])?;
        pools.push(ClassPool::new(features, ids)?);
    }

    let neg_rows: Vec<Vec<f64>> = (0..spec.negatives)
        .map(|_| gaussian(&mut rng, &origin, spec.background_sigma))
        .collect();
    let neg_ids: Vec<u64> = (next_id..next_id + spec.negatives as u64).collect();
    let negatives = NegativePool::new(
        FeatureMatrix::from_rows(&neg_rows, vec![NEGATIVE_LABEL; spec.negatives])?,
        neg_ids,
    )?;

    let mut test_rows = Vec::with_capacity(spec.classes * spec.test_per_class);
    let mut test_labels = Vec::with_capacity(test_rows.capacity());
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..spec.test_per_class {
            test_rows.push(gaussian(&mut rng, center, 1.0));
            test_labels.push(c as i32);
        }
    }
    let test = if test_rows.is_empty() {
        FeatureMatrix::empty(spec.dim)
    } else {
        FeatureMatrix::from_rows(&test_rows, test_labels)?
    };

    Ok(SyntheticData {
        pools,
        negatives,
        planted,
        test,
        centers,
    })
}
