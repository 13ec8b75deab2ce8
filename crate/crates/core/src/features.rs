//! Row-major instance x dimension tables with integer labels, and the
//! `FAMEMTX1` file format used to pass them between pipeline stages.

use std::io::Write;

use crate::error::{FameError, Result};
use crate::io_util::Cursor;

/// Label used for unlabeled rows and global negatives.
pub const NEGATIVE_LABEL: i32 = -1;

const MAGIC: &[u8; 8] = b"FAMEMTX1";

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    dim: usize,
    values: Vec<f64>,
    labels: Vec<i32>,
}

impl FeatureMatrix {
    pub fn new(dim: usize, values: Vec<f64>, labels: Vec<i32>) -> Result<Self> {
        if dim == 0 {
            return Err(FameError::Dimension("feature dimension must be >= 1".into()));
        }
        if values.len() != labels.len() * dim {
            return Err(FameError::Dimension(format!(
                "{} labels x dim {dim} needs {} values, got {}",
                labels.len(),
                labels.len() * dim,
                values.len()
            )));
        }
        Ok(FeatureMatrix { dim, values, labels })
    }

    pub fn empty(dim: usize) -> Self {
        FeatureMatrix {
            dim,
            values: Vec::new(),
            labels: Vec::new(),
        }
    }

    /// Builds from row slices; every row must have the same length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], labels: Vec<i32>) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        if rows.len() != labels.len() {
            return Err(FameError::Dimension(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let mut values = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(FameError::Dimension(format!(
                    "row {i} has length {}, expected {dim}",
                    r.len()
                )));
            }
            values.extend_from_slice(r);
        }
        FeatureMatrix::new(dim.max(1), values, labels)
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> &[i32] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> i32 {
        self.labels[i]
    }

    pub fn push_row(&mut self, row: &[f64], label: i32) -> Result<()> {
        if row.len() != self.dim {
            return Err(FameError::Dimension(format!(
                "row of length {} pushed into dim {} matrix",
                row.len(),
                self.dim
            )));
        }
        self.values.extend_from_slice(row);
        self.labels.push(label);
        Ok(())
    }

    /// New matrix holding the given rows in the given order.
    pub fn select(&self, indices: &[usize]) -> FeatureMatrix {
        let mut values = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            values.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        FeatureMatrix {
            dim: self.dim,
            values,
            labels,
        }
    }

    /// Distinct non-negative labels in ascending order.
    pub fn classes(&self) -> Vec<i32> {
        let mut c: Vec<i32> = self.labels.iter().copied().filter(|&l| l >= 0).collect();
        c.sort_unstable();
        c.dedup();
        c
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(i) => Err(FameError::Numeric(format!(
                "non-finite feature at row {} column {}",
                i / self.dim,
                i % self.dim
            ))),
            None => Ok(()),
        }
    }

    /// Serializes as `FAMEMTX1`. Values are stored as `f32`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.n() * (4 + 4 * self.dim));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.n() as u32).to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        for l in &self.labels {
            out.extend_from_slice(&l.to_le_bytes());
        }
        for v in &self.values {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor::new(bytes);
        cur.expect_magic(MAGIC)?;
        let n = cur.u32()? as usize;
        let dim = cur.u32()? as usize;
        let labels = (0..n).map(|_| cur.i32()).collect::<Result<Vec<_>>>()?;
        let values = (0..n * dim)
            .map(|_| cur.f32().map(f64::from))
            .collect::<Result<Vec<_>>>()?;
        cur.finish()?;
        FeatureMatrix::new(dim, values, labels)
    }

    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(&self.to_bytes())
    }
}
