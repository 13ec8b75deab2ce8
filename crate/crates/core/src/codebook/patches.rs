use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{FameError, Result};
use crate::image::GrayImage;

/// Default contrast-normalization stabilizer: 10 on a 0..255 intensity scale,
/// expressed for intensities in `[0, 1]`.
pub const DEFAULT_CONTRAST_EPSILON: f64 = 10.0 / (255.0 * 255.0);

/// `n` patches of dimension `d`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchMatrix {
    d: usize,
    values: Vec<f64>,
}

impl PatchMatrix {
    pub fn new(d: usize, values: Vec<f64>) -> Result<Self> {
        if d == 0 || values.is_empty() || !values.len().is_multiple_of(d) {
            return Err(FameError::Dimension(format!(
                "{} values do not form a non-empty matrix with {d} columns",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FameError::Numeric(
                "patch matrix contains non-finite values".into(),
            ));
        }
        Ok(PatchMatrix { d, values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        if rows.iter().any(|r| r.as_ref().len() != d) {
            return Err(FameError::Dimension("ragged patch rows".into()));
        }
        PatchMatrix::new(d, rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect())
    }

    pub fn n(&self) -> usize {
        self.values.len() / self.d
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.values.chunks_exact(self.d)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Applies `f` to every row in place.
    pub fn map_rows(&mut self, mut f: impl FnMut(&mut [f64])) {
        for r in self.values.chunks_exact_mut(self.d) {
            f(r);
        }
    }
}

/// Copies the `rf_w x rf_h` window with top-left corner `(x, y)` into `out`, row-major.
pub(crate) fn copy_patch(img: &GrayImage, x: usize, y: usize, rf_w: usize, rf_h: usize, out: &mut [f64]) {
    let px = img.pixels();
    let w = img.width();
    for dy in 0..rf_h {
        let start = (y + dy) * w + x;
        out[dy * rf_w..(dy + 1) * rf_w].copy_from_slice(&px[start..start + rf_w]);
    }
}

/// Draws `count` windows uniformly over every valid (image, top-left) placement.
pub fn sample_patches(
    images: &[GrayImage],
    rf_w: usize,
    rf_h: usize,
    count: usize,
    seed: u64,
) -> Result<PatchMatrix> {
    if images.is_empty() || count == 0 || rf_w == 0 || rf_h == 0 {
        return Err(FameError::Argument(
            "need at least one image, a non-empty receptive field and count >= 1".into(),
        ));
    }
    // cumulative placement counts so each placement is equally likely
    let mut cumulative = Vec::with_capacity(images.len());
    let mut total = 0usize;
    for (i, img) in images.iter().enumerate() {
        if img.width() < rf_w || img.height() < rf_h {
            return Err(FameError::Dimension(format!(
                "image {i} is {}x{}, smaller than the {rf_w}x{rf_h} receptive field",
                img.width(),
                img.height()
            )));
        }
        total += (img.width() - rf_w + 1) * (img.height() - rf_h + 1);
        cumulative.push(total);
    }
    let d = rf_w * rf_h;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = vec![0.0; count * d];
    for row in values.chunks_exact_mut(d) {
        let pick = rng.random_range(0..total);
        let which = cumulative.partition_point(|&c| c <= pick);
        let offset = pick - if which == 0 { 0 } else { cumulative[which - 1] };
        let img = &images[which];
        let across = img.width() - rf_w + 1;
        copy_patch(img, offset % across, offset / across, rf_w, rf_h, row);
    }
    PatchMatrix::new(d, values)
}

/// Standardizes a patch: `(x - mean) / sqrt(var + epsilon)` with the population variance.
pub fn contrast_normalize(patch: &[f64], epsilon: f64) -> Vec<f64> {
    let mut out = patch.to_vec();
    contrast_normalize_in_place(&mut out, epsilon);
    out
}

pub(crate) fn contrast_normalize_in_place(patch: &mut [f64], epsilon: f64) {
    let n = patch.len() as f64;
    let mean = patch.iter().sum::<f64>() / n;
    let var = patch.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let denom = (var + epsilon).sqrt();
    for v in patch.iter_mut() {
        *v = if denom > 0.0 { (*v - mean) / denom } else { 0.0 };
    }
}
