use std::collections::HashMap;

use crate::error::{FameError, Result};
use crate::features::FeatureMatrix;

/// Instances collected for one class, with the subset still in play.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassPool {
    features: FeatureMatrix,
    source_ids: Vec<u64>,
    active: Vec<bool>,
}

impl ClassPool {
    pub fn new(features: FeatureMatrix, source_ids: Vec<u64>) -> Result<Self> {
        check_ids(&features, &source_ids)?;
        let m = features.n();
        Ok(ClassPool {
            features,
            source_ids,
            active: vec![true; m],
        })
    }

    /// Pool whose source ids are the row indices.
    pub fn from_features(features: FeatureMatrix) -> Self {
        let ids = (0..features.n() as u64).collect();
        ClassPool::new(features, ids).expect("row indices are unique")
    }

    pub fn m(&self) -> usize {
        self.features.n()
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub fn source_ids(&self) -> &[u64] {
        &self.source_ids
    }

    pub fn source_id(&self, i: usize) -> u64 {
        self.source_ids[i]
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.active[i]
    }

    /// Active row indices, ascending.
    pub fn active_indices(&self) -> Vec<usize> {
        (0..self.m()).filter(|&i| self.active[i]).collect()
    }

    pub fn eliminated_indices(&self) -> Vec<usize> {
        (0..self.m()).filter(|&i| !self.active[i]).collect()
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    pub fn eliminated_count(&self) -> usize {
        self.m() - self.active_count()
    }

    pub fn pruned_fraction(&self) -> f64 {
        if self.m() == 0 {
            0.0
        } else {
            self.eliminated_count() as f64 / self.m() as f64
        }
    }

    /// Removes rows from the active set. Eliminated rows never return.
    pub fn eliminate(&mut self, indices: &[usize]) -> Result<()> {
        for &i in indices {
            if i >= self.m() || !self.active[i] {
                return Err(FameError::Argument(format!("row {i} is not active")));
            }
        }
        for &i in indices {
            self.active[i] = false;
        }
        Ok(())
    }

    pub fn index_of(&self, source_id: u64) -> Option<usize> {
        self.source_ids.iter().position(|&s| s == source_id)
    }

    pub(crate) fn id_index(&self) -> HashMap<u64, usize> {
        self.source_ids.iter().enumerate().map(|(i, &s)| (s, i)).collect()
    }

    /// A new pool over the given rows, keeping their source ids and active flags.
    pub fn subset(&self, indices: &[usize]) -> ClassPool {
        ClassPool {
            features: self.features.select(indices),
            source_ids: indices.iter().map(|&i| self.source_ids[i]).collect(),
            active: indices.iter().map(|&i| self.active[i]).collect(),
        }
    }

    /// Rows still active.
    pub fn active_features(&self) -> FeatureMatrix {
        self.features.select(&self.active_indices())
    }

    pub fn active_source_ids(&self) -> Vec<u64> {
        self.active_indices()
            .into_iter()
            .map(|i| self.source_ids[i])
            .collect()
    }
}

/// Global negatives shared by every class.
#[derive(Debug, Clone, PartialEq)]
pub struct NegativePool {
    features: FeatureMatrix,
    source_ids: Vec<u64>,
}

impl NegativePool {
    pub fn new(features: FeatureMatrix, source_ids: Vec<u64>) -> Result<Self> {
        if features.n() == 0 {
            return Err(FameError::Argument("negative pool is empty".into()));
        }
        check_ids(&features, &source_ids)?;
        Ok(NegativePool { features, source_ids })
    }

    pub fn from_features(features: FeatureMatrix) -> Result<Self> {
        let ids = (0..features.n() as u64).collect();
        NegativePool::new(features, ids)
    }

    pub fn len(&self) -> usize {
        self.features.n()
    }

    pub fn is_empty(&self) -> bool {
        self.features.n() == 0
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub fn source_ids(&self) -> &[u64] {
        &self.source_ids
    }

    pub(crate) fn check_disjoint(&self, pool: &ClassPool) -> Result<()> {
        let ids = pool.id_index();
        match self.source_ids.iter().find(|s| ids.contains_key(s)) {
            Some(s) => Err(FameError::Argument(format!(
                "source id {s} appears in both the class pool and the negatives"
            ))),
            None => Ok(()),
        }
    }
}

fn check_ids(features: &FeatureMatrix, ids: &[u64]) -> Result<()> {
    if ids.len() != features.n() {
        return Err(FameError::Dimension(format!(
            "{} rows but {} source ids",
            features.n(),
            ids.len()
        )));
    }
    let mut sorted = ids.to_vec();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(FameError::Argument(format!("duplicate source id {}", w[0])));
    }
    Ok(())
}
