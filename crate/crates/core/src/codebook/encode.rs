use super::patches::copy_patch;
use super::Codebook;
use crate::error::{FameError, Result};
use crate::image::GrayImage;

/// Number of pooling regions: four quadrants plus the center.
pub const POOL_REGIONS: usize = 5;

/// `a_k = max(0, mean(z) - z_k)`; masked entries are zero.
pub fn triangular_activation(distances: &[f64], outlier_mask: &[bool], out: &mut [f64]) {
    let mu = distances.iter().sum::<f64>() / distances.len() as f64;
    for ((a, z), &masked) in out.iter_mut().zip(distances).zip(outlier_mask) {
        *a = if masked { 0.0 } else { (mu - z).max(0.0) };
    }
}

/// Encodes one already-preprocessed patch against the codebook centroids.
pub fn triangular_encode(patch: &[f64], cb: &Codebook) -> Result<Vec<f64>> {
    if patch.len() != cb.patch_dim() {
        return Err(FameError::Dimension(format!(
            "patch of length {} for a codebook of dimension {}",
            patch.len(),
            cb.patch_dim()
        )));
    }
    let distances: Vec<f64> = cb.centroid_rows().map(|c| euclidean(patch, c)).collect();
    let mut out = vec![0.0; cb.k()];
    triangular_activation(&distances, cb.outlier_mask(), &mut out);
    Ok(out)
}

#[inline]
fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    super::kmeans::sq_dist(a, b).sqrt()
}

/// Pooling regions containing the placement whose top-left corner is at
/// offset `pos` along one axis, where `last` is the offset of the final
/// placement on that axis. Returns `(in_second_half, in_center_band)`.
///
/// Placement centers span `[c0, c0 + last]`. The first half is centers below
/// the midpoint; the center band is the closed middle half of the span.
#[inline]
pub fn axis_membership(pos: usize, last: usize) -> (bool, bool) {
    let second_half = 2 * pos >= last;
    let center = (4 * pos).abs_diff(2 * last) <= last;
    (second_half, center)
}

/// Region flags `[top-left, top-right, bottom-left, bottom-right, center]`.
#[inline]
pub fn region_membership(x: usize, y: usize, x_last: usize, y_last: usize) -> [bool; POOL_REGIONS] {
    let (right, cx) = axis_membership(x, x_last);
    let (bottom, cy) = axis_membership(y, y_last);
    let quadrant = (bottom as usize) * 2 + right as usize;
    let mut m = [false; POOL_REGIONS];
    m[quadrant] = true;
    m[4] = cx && cy;
    m
}

/// Slides the receptive field over the image, encodes every placement, and
/// average-pools activations into the five regions. Output length is `5 K`,
/// ordered `[TL, TR, BL, BR, center]`. Each region divides by the number of
/// placements it contains; empty regions stay zero.
pub fn pool_image(img: &GrayImage, cb: &Codebook) -> Result<Vec<f64>> {
    let (rf_w, rf_h, stride) = (cb.rf_w(), cb.rf_h(), cb.stride());
    if img.width() < rf_w || img.height() < rf_h {
        return Err(FameError::Dimension(format!(
            "{}x{} image is smaller than the {rf_w}x{rf_h} receptive field",
            img.width(),
            img.height()
        )));
    }
    let k = cb.k();
    let d = cb.patch_dim();
    let x_last = (img.width() - rf_w) / stride * stride;
    let y_last = (img.height() - rf_h) / stride * stride;

    let mut sums = vec![0.0; POOL_REGIONS * k];
    let mut counts = [0usize; POOL_REGIONS];
    let mut patch = vec![0.0; d];
    let mut scratch = Preprocess::new(d);
    let mut distances = vec![0.0; k];
    let mut act = vec![0.0; k];

    for y in (0..=y_last).step_by(stride) {
        for x in (0..=x_last).step_by(stride) {
            copy_patch(img, x, y, rf_w, rf_h, &mut patch);
            let whitened = scratch.run(cb, &patch);
            for (dist, c) in distances.iter_mut().zip(cb.centroid_rows()) {
                *dist = euclidean(whitened, c);
            }
            triangular_activation(&distances, cb.outlier_mask(), &mut act);
            for (r, inside) in region_membership(x, y, x_last, y_last).into_iter().enumerate() {
                if inside {
                    counts[r] += 1;
                    for (s, a) in sums[r * k..(r + 1) * k].iter_mut().zip(&act) {
                        *s += a;
                    }
                }
            }
        }
    }
    for (r, &c) in counts.iter().enumerate() {
        if c > 0 {
            let inv = 1.0 / c as f64;
            sums[r * k..(r + 1) * k].iter_mut().for_each(|s| *s *= inv);
        }
    }
    Ok(sums)
}

/// Concatenation of the raw-channel and LBP-channel pooled features (`2 * 5 * K`).
pub fn extract_features(
    raw: &GrayImage,
    lbp: &GrayImage,
    cb_raw: &Codebook,
    cb_lbp: &Codebook,
) -> Result<Vec<f64>> {
    let mut out = pool_image(raw, cb_raw)?;
    out.extend(pool_image(lbp, cb_lbp)?);
    Ok(out)
}

/// Reusable buffers for contrast normalization + whitening of one patch.
pub(crate) struct Preprocess {
    normalized: Vec<f64>,
    centered: Vec<f64>,
    whitened: Vec<f64>,
}

impl Preprocess {
    pub(crate) fn new(d: usize) -> Self {
        Preprocess {
            normalized: vec![0.0; d],
            centered: vec![0.0; d],
            whitened: vec![0.0; d],
        }
    }

    pub(crate) fn run(&mut self, cb: &Codebook, patch: &[f64]) -> &[f64] {
        self.normalized.copy_from_slice(patch);
        if cb.contrast_normalize() {
            super::patches::contrast_normalize_in_place(&mut self.normalized, cb.contrast_epsilon());
        }
        cb.whitening()
            .apply_into(&self.normalized, &mut self.centered, &mut self.whitened);
        &self.whitened
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangular_formula() {
        let mut out = [0.0; 3];
        triangular_activation(&[1.0, 2.0, 3.0], &[false; 3], &mut out);
        assert_eq!(out, [1.0, 0.0, 0.0]);
        triangular_activation(&[2.5, 2.5, 2.5], &[false; 3], &mut out);
        assert_eq!(out, [0.0; 3]);
        triangular_activation(&[1.0, 2.0, 3.0], &[true, false, false], &mut out);
        assert_eq!(out, [0.0; 3]);
    }

    #[test]
    fn single_placement_is_bottom_right_and_center() {
        assert_eq!(region_membership(0, 0, 0, 0), [false, false, false, true, true]);
    }

    #[test]
    fn axis_split_for_seven_placements() {
        let halves: Vec<bool> = (0..7).map(|p| axis_membership(p, 6).0).collect();
        assert_eq!(halves, [false, false, false, true, true, true, true]);
        let center: Vec<bool> = (0..7).map(|p| axis_membership(p, 6).1).collect();
        assert_eq!(center, [false, false, true, true, true, false, false]);
    }
}
