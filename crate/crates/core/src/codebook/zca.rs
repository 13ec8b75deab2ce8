use nalgebra::{DMatrix, SymmetricEigen};

use super::patches::PatchMatrix;
use crate::error::{FameError, Result};

/// ZCA whitening `x -> W (x - mean)` with `W = E diag((lambda + eps)^-1/2) E^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct WhiteningTransform {
    pub(crate) mean: Vec<f64>,
    pub(crate) matrix: Vec<f64>,
    pub(crate) epsilon: f64,
}

impl WhiteningTransform {
    pub fn new(mean: Vec<f64>, matrix: Vec<f64>, epsilon: f64) -> Result<Self> {
        let d = mean.len();
        if d == 0 || matrix.len() != d * d {
            return Err(FameError::Dimension(format!(
                "whitening matrix must be {d}x{d}, got {} entries",
                matrix.len()
            )));
        }
        Ok(WhiteningTransform {
            mean,
            matrix,
            epsilon,
        })
    }

    pub fn identity(d: usize) -> Self {
        let mut matrix = vec![0.0; d * d];
        for i in 0..d {
            matrix[i * d + i] = 1.0;
        }
        WhiteningTransform {
            mean: vec![0.0; d],
            matrix,
            epsilon: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Row-major `d x d` matrix.
    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub(crate) fn apply_into(&self, x: &[f64], centered: &mut [f64], out: &mut [f64]) {
        let d = self.mean.len();
        for ((c, v), m) in centered.iter_mut().zip(x).zip(&self.mean) {
            *c = v - m;
        }
        for (o, row) in out.iter_mut().zip(self.matrix.chunks_exact(d)) {
            *o = row.iter().zip(centered.iter()).map(|(a, b)| a * b).sum();
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(FameError::Dimension(format!(
                "vector of length {} given to a {}-d whitening transform",
                x.len(),
                self.dim()
            )));
        }
        let mut centered = vec![0.0; x.len()];
        let mut out = vec![0.0; x.len()];
        self.apply_into(x, &mut centered, &mut out);
        Ok(out)
    }
}

/// Sample covariance (divisor `n - 1`) around the column mean.
pub fn sample_covariance(patches: &PatchMatrix) -> (Vec<f64>, DMatrix<f64>) {
    let (n, d) = (patches.n(), patches.d());
    let mut mean = vec![0.0; d];
    for r in patches.rows() {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = DMatrix::<f64>::zeros(d, d);
    let mut centered = vec![0.0; d];
    for r in patches.rows() {
        for ((c, v), m) in centered.iter_mut().zip(r).zip(&mean) {
            *c = v - m;
        }
        for i in 0..d {
            let ci = centered[i];
            for j in i..d {
                cov[(i, j)] += ci * centered[j];
            }
        }
    }
    let denom = (n.max(2) - 1) as f64;
    for i in 0..d {
        for j in i..d {
            let v = cov[(i, j)] / denom;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    (mean, cov)
}

/// Fits ZCA whitening from the eigendecomposition of the sample covariance.
pub fn fit_zca(patches: &PatchMatrix, epsilon: f64) -> Result<WhiteningTransform> {
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(FameError::Argument(format!(
            "epsilon must be >= 0, got {epsilon}"
        )));
    }
    if patches.n() < 2 {
        return Err(FameError::Argument("need at least 2 patches to whiten".into()));
    }
    let d = patches.d();
    let (mean, cov) = sample_covariance(patches);
    if cov.iter().any(|v| !v.is_finite()) {
        return Err(FameError::Numeric("covariance is not finite".into()));
    }
    let eig = SymmetricEigen::try_new(cov, f64::EPSILON, 10_000)
        .ok_or_else(|| FameError::Numeric("eigendecomposition did not converge".into()))?;
    let top = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let mut scales = Vec::with_capacity(d);
    for &lambda in eig.eigenvalues.iter() {
        let shifted = lambda.max(0.0) + epsilon;
        if shifted <= 1e-12 * top.max(1.0) {
            return Err(FameError::Numeric(
                "covariance is singular; whitening needs epsilon > 0".into(),
            ));
        }
        scales.push(1.0 / shifted.sqrt());
    }
    let e = &eig.eigenvectors;
    let mut matrix = vec![0.0; d * d];
    for i in 0..d {
        for j in i..d {
            let v: f64 = (0..d).map(|k| e[(i, k)] * scales[k] * e[(j, k)]).sum();
            matrix[i * d + j] = v;
            matrix[j * d + i] = v;
        }
    }
    WhiteningTransform::new(mean, matrix, epsilon)
}

/// Whitens every row.
pub fn apply_zca(t: &WhiteningTransform, patches: &PatchMatrix) -> Result<PatchMatrix> {
    if patches.d() != t.dim() {
        return Err(FameError::Dimension(format!(
            "{}-d patches given to a {}-d whitening transform",
            patches.d(),
            t.dim()
        )));
    }
    let d = t.dim();
    let mut centered = vec![0.0; d];
    let mut values = Vec::with_capacity(patches.values().len());
    let mut out = vec![0.0; d];
    for r in patches.rows() {
        t.apply_into(r, &mut centered, &mut out);
        values.extend_from_slice(&out);
    }
    PatchMatrix::new(d, values)
}
