use crate::error::{FameError, Result};
use crate::io_util::Cursor;

const MAGIC: &[u8; 8] = b"FAMEMDL1";

/// Per-instance loss of a linear classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Loss {
    /// `log(1 + exp(-z))`
    Logistic,
    /// `max(0, 1 - z)^2`
    SquaredHinge,
}

impl Loss {
    pub fn tag(self) -> u8 {
        match self {
            Loss::Logistic => 0,
            Loss::SquaredHinge => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Loss::Logistic),
            1 => Some(Loss::SquaredHinge),
            _ => None,
        }
    }

    /// Loss at signed margin `z = y (w.x + b)`.
    #[inline]
    pub fn value(self, z: f64) -> f64 {
        match self {
            Loss::Logistic => softplus(-z),
            Loss::SquaredHinge => {
                let s = (1.0 - z).max(0.0);
                s * s
            }
        }
    }

    /// First and second derivative with respect to `z`.
    #[inline]
    pub(crate) fn derivatives(self, z: f64) -> (f64, f64) {
        match self {
            Loss::Logistic => {
                let p = sigmoid(-z);
                (-p, p * (1.0 - p))
            }
            Loss::SquaredHinge => {
                if z < 1.0 {
                    (-2.0 * (1.0 - z), 2.0)
                } else {
                    (0.0, 0.0)
                }
            }
        }
    }
}

/// `log(1 + exp(x))` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// L1-regularized linear classifier with sparse weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseLinearModel {
    dim: usize,
    weights: Vec<(usize, f64)>,
    bias: f64,
    lambda: f64,
    loss: Loss,
}

impl SparseLinearModel {
    /// Zero entries are dropped; indices must be unique and `< dim`.
    pub fn new(dim: usize, weights: Vec<(usize, f64)>, bias: f64, lambda: f64, loss: Loss) -> Result<Self> {
        let mut weights: Vec<(usize, f64)> = weights.into_iter().filter(|w| w.1 != 0.0).collect();
        weights.sort_by_key(|w| w.0);
        if weights.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(FameError::Argument("duplicate weight index".into()));
        }
        if let Some(w) = weights.iter().find(|w| w.0 >= dim) {
            return Err(FameError::Dimension(format!("weight index {} >= dim {dim}", w.0)));
        }
        if weights.iter().any(|w| !w.1.is_finite()) || !bias.is_finite() {
            return Err(FameError::Numeric("model parameters must be finite".into()));
        }
        Ok(SparseLinearModel {
            dim,
            weights,
            bias,
            lambda,
            loss,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Non-zero weights sorted by index.
    pub fn weights(&self) -> &[(usize, f64)] {
        &self.weights
    }

    pub fn weight(&self, j: usize) -> f64 {
        self.weights
            .binary_search_by_key(&j, |w| w.0)
            .map(|i| self.weights[i].1)
            .unwrap_or(0.0)
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn loss(&self) -> Loss {
        self.loss
    }

    pub fn active_features(&self) -> usize {
        self.weights.len()
    }

    /// `w.x + b`
    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(FameError::Dimension(format!(
                "input of length {} for a model of dimension {}",
                x.len(),
                self.dim
            )));
        }
        Ok(self.decision_unchecked(x))
    }

    #[inline]
    pub(crate) fn decision_unchecked(&self, x: &[f64]) -> f64 {
        self.weights.iter().map(|&(j, w)| w * x[j]).sum::<f64>() + self.bias
    }

    /// Logistic sigmoid of the decision value.
    pub fn probability(&self, x: &[f64]) -> Result<f64> {
        self.decision(x).map(sigmoid)
    }

    /// L1-penalized objective on a labeled set (`y` in `{-1, +1}`).
    pub fn objective<'a>(&self, rows: impl IntoIterator<Item = &'a [f64]>, y: &[f64]) -> f64 {
        let loss: f64 = rows
            .into_iter()
            .zip(y)
            .map(|(r, &yi)| self.loss.value(yi * self.decision_unchecked(r)))
            .sum();
        loss + self.lambda * self.weights.iter().map(|w| w.1.abs()).sum::<f64>()
    }

    pub(crate) fn write_into(&self, out: &mut Vec<u8>) {
        // weights that vanish in f32 are not written
        let stored: Vec<(u32, f32)> = self
            .weights
            .iter()
            .map(|&(j, w)| (j as u32, w as f32))
            .filter(|w| w.1 != 0.0)
            .collect();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(stored.len() as u32).to_le_bytes());
        out.push(self.loss.tag());
        out.extend_from_slice(&self.lambda.to_le_bytes());
        out.extend_from_slice(&self.bias.to_le_bytes());
        for (j, w) in stored {
            out.extend_from_slice(&j.to_le_bytes());
            out.extend_from_slice(&w.to_le_bytes());
        }
    }

    /// Serializes as `FAMEMDL1`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_into(&mut out);
        out
    }

    pub(crate) fn read_from(cur: &mut Cursor<'_>) -> Result<Self> {
        cur.expect_magic(MAGIC)?;
        let dim = cur.u32()? as usize;
        let nnz = cur.u32()? as usize;
        let tag_at = cur.position();
        let loss = Loss::from_tag(cur.u8()?).ok_or_else(|| FameError::parse(tag_at, "unknown loss tag"))?;
        let lambda = cur.f64()?;
        let bias = cur.f64()?;
        let mut weights = Vec::with_capacity(nnz);
        for _ in 0..nnz {
            let j = cur.u32()? as usize;
            let w = cur.f32()? as f64;
            weights.push((j, w));
        }
        SparseLinearModel::new(dim, weights, bias, lambda, loss)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor::new(bytes);
        let m = Self::read_from(&mut cur)?;
        cur.finish()?;
        Ok(m)
    }
}

/// Summary of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub final_objective: f64,
    /// Coordinate sweeps performed.
    pub iterations: usize,
    pub training_accuracy: f64,
    pub active_features: usize,
    /// Objective after each sweep.
    pub objective_history: Vec<f64>,
    /// Largest violation of the L1 optimality conditions at exit.
    pub max_violation: f64,
}
