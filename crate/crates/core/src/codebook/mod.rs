//! Unsupervised filter learning: random patches are (optionally) contrast
//! normalized, ZCA whitened and clustered with k-means. Centroids with
//! abnormal assignment counts are masked out of the encoding.

mod encode;
mod kmeans;
mod patches;
mod zca;

pub use encode::{
    axis_membership, extract_features, pool_image, region_membership, triangular_activation,
    triangular_encode, POOL_REGIONS,
};
pub use kmeans::{flag_outlier_centroids, kmeans, percentile, KMeansResult, OutlierRule};
pub use patches::{contrast_normalize, sample_patches, PatchMatrix, DEFAULT_CONTRAST_EPSILON};
pub use zca::{apply_zca, fit_zca, sample_covariance, WhiteningTransform};

use log::debug;

use crate::error::{FameError, Result};
use crate::image::GrayImage;
use crate::io_util::Cursor;

const MAGIC: &[u8; 8] = b"FAMECB01";

/// Which filter bank a codebook belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    Raw,
    Lbp,
}

impl Channel {
    pub fn tag(self) -> u8 {
        match self {
            Channel::Raw => 0,
            Channel::Lbp => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Channel::Raw),
            1 => Some(Channel::Lbp),
            _ => None,
        }
    }
}

/// Learned filters for one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    channel: Channel,
    rf_w: usize,
    rf_h: usize,
    stride: usize,
    whitening: WhiteningTransform,
    centroids: Vec<f64>,
    outlier_mask: Vec<bool>,
}

impl Codebook {
    pub fn new(
        channel: Channel,
        rf_w: usize,
        rf_h: usize,
        stride: usize,
        whitening: WhiteningTransform,
        centroids: Vec<f64>,
        outlier_mask: Vec<bool>,
    ) -> Result<Self> {
        let d = rf_w * rf_h;
        if d == 0 || stride == 0 {
            return Err(FameError::Argument(
                "receptive field and stride must be positive".into(),
            ));
        }
        if whitening.dim() != d {
            return Err(FameError::Dimension(format!(
                "whitening is {}-d but the receptive field has {d} pixels",
                whitening.dim()
            )));
        }
        let k = outlier_mask.len();
        if k < 2 || centroids.len() != k * d {
            return Err(FameError::Dimension(format!(
                "need K >= 2 centroids of dimension {d} matching the mask ({} values, K = {k})",
                centroids.len()
            )));
        }
        Ok(Codebook {
            channel,
            rf_w,
            rf_h,
            stride,
            whitening,
            centroids,
            outlier_mask,
        })
    }

    pub fn channel(&self) -> Channel {
        self.channel
    }

    pub fn k(&self) -> usize {
        self.outlier_mask.len()
    }

    pub fn rf_w(&self) -> usize {
        self.rf_w
    }

    pub fn rf_h(&self) -> usize {
        self.rf_h
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn patch_dim(&self) -> usize {
        self.rf_w * self.rf_h
    }

    /// Raw-pixel filters contrast-normalize patches; LBP filters do not.
    pub fn contrast_normalize(&self) -> bool {
        self.channel == Channel::Raw
    }

    pub fn contrast_epsilon(&self) -> f64 {
        DEFAULT_CONTRAST_EPSILON
    }

    pub fn whitening(&self) -> &WhiteningTransform {
        &self.whitening
    }

    pub fn centroids(&self) -> &[f64] {
        &self.centroids
    }

    pub fn centroid_rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.centroids.chunks_exact(self.patch_dim())
    }

    pub fn outlier_mask(&self) -> &[bool] {
        &self.outlier_mask
    }

    pub fn set_outlier_mask(&mut self, mask: Vec<bool>) -> Result<()> {
        if mask.len() != self.k() {
            return Err(FameError::Dimension(format!(
                "mask of length {} for K = {}",
                mask.len(),
                self.k()
            )));
        }
        self.outlier_mask = mask;
        Ok(())
    }

    /// Contrast normalization (raw channel only) followed by whitening.
    pub fn preprocess(&self, patch: &[f64]) -> Result<Vec<f64>> {
        if patch.len() != self.patch_dim() {
            return Err(FameError::Dimension(format!(
                "patch of length {} for receptive field {}x{}",
                patch.len(),
                self.rf_w,
                self.rf_h
            )));
        }
        Ok(encode::Preprocess::new(patch.len()).run(self, patch).to_vec())
    }

    /// Serializes as `FAMECB01`: little-endian header, `f32` arrays, mask bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let d = self.patch_dim();
        let mut out = Vec::with_capacity(41 + 4 * (d + d * d + self.k() * d) + self.k());
        out.extend_from_slice(MAGIC);
        out.push(self.channel.tag());
        for v in [self.k(), d, self.rf_w, self.rf_h, self.stride] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        out.extend_from_slice(&self.whitening.epsilon.to_le_bytes());
        let floats = self
            .whitening
            .mean
            .iter()
            .chain(&self.whitening.matrix)
            .chain(&self.centroids);
        for v in floats {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        out.extend(self.outlier_mask.iter().map(|&m| m as u8));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor::new(bytes);
        cur.expect_magic(MAGIC)?;
        let tag_at = cur.position();
        let channel =
            Channel::from_tag(cur.u8()?).ok_or_else(|| FameError::parse(tag_at, "unknown channel tag"))?;
        let dims_at = cur.position();
        let k = cur.u32()? as usize;
        let d = cur.u32()? as usize;
        let rf_w = cur.u32()? as usize;
        let rf_h = cur.u32()? as usize;
        let stride = cur.u32()? as usize;
        if rf_w * rf_h != d {
            return Err(FameError::parse(dims_at, "patch dimension != rf_w * rf_h"));
        }
        let epsilon = cur.f64()?;
        let mut floats =
            |count: usize| -> Result<Vec<f64>> { (0..count).map(|_| cur.f32().map(f64::from)).collect() };
        let mean = floats(d)?;
        let matrix = floats(d * d)?;
        let centroids = floats(k * d)?;
        let mask_at = cur.position();
        let mut outlier_mask = Vec::with_capacity(k);
        for i in 0..k {
            outlier_mask.push(match cur.u8()? {
                0 => false,
                1 => true,
                _ => return Err(FameError::parse(mask_at + i, "mask byte must be 0 or 1")),
            });
        }
        cur.finish()?;
        Codebook::new(
            channel,
            rf_w,
            rf_h,
            stride,
            WhiteningTransform::new(mean, matrix, epsilon)?,
            centroids,
            outlier_mask,
        )
    }
}

/// Parameters for learning one channel's codebook.
#[derive(Debug, Clone, PartialEq)]
pub struct CodebookConfig {
    pub k: usize,
    pub rf_w: usize,
    pub rf_h: usize,
    pub stride: usize,
    pub patches: usize,
    pub zca_epsilon: f64,
    pub kmeans_iters: usize,
    pub outlier_rule: OutlierRule,
    pub seed: u64,
}

impl Default for CodebookConfig {
    fn default() -> Self {
        CodebookConfig {
            k: 64,
            rf_w: 6,
            rf_h: 6,
            stride: 1,
            patches: 20_000,
            zca_epsilon: 0.5,
            kmeans_iters: 100,
            outlier_rule: OutlierRule::High,
            seed: 0,
        }
    }
}

/// Samples patches, whitens, clusters and flags outlier centroids.
pub fn learn_codebook(images: &[GrayImage], channel: Channel, cfg: &CodebookConfig) -> Result<Codebook> {
    let mut patches = sample_patches(images, cfg.rf_w, cfg.rf_h, cfg.patches, cfg.seed)?;
    if channel == Channel::Raw {
        patches.map_rows(|r| patches::contrast_normalize_in_place(r, DEFAULT_CONTRAST_EPSILON));
    }
    let whitening = fit_zca(&patches, cfg.zca_epsilon)?;
    let white = apply_zca(&whitening, &patches)?;
    let clusters = kmeans(&white, cfg.k, cfg.kmeans_iters, cfg.seed.wrapping_add(1))?;
    let mask = flag_outlier_centroids(&clusters.counts, cfg.outlier_rule);
    debug!(
        "{channel:?} codebook: {} patches, {} k-means steps, {} outlier centroids",
        white.n(),
        clusters.sse_history.len(),
        mask.iter().filter(|&&m| m).count()
    );
    Codebook::new(
        channel,
        cfg.rf_w,
        cfg.rf_h,
        cfg.stride,
        whitening,
        clusters.centroids,
        mask,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_codebook() -> Codebook {
        Codebook::new(
            Channel::Lbp,
            2,
            1,
            1,
            WhiteningTransform::identity(2),
            vec![0.0, 0.0, 1.0, 1.0, 0.5, 0.0],
            vec![false, true, false],
        )
        .unwrap()
    }

    #[test]
    fn serialization_layout() {
        let cb = tiny_codebook();
        let b = cb.to_bytes();
        assert_eq!(&b[..8], b"FAMECB01");
        assert_eq!(b[8], 1);
        assert_eq!(&b[9..13], &3u32.to_le_bytes());
        assert_eq!(&b[13..17], &2u32.to_le_bytes());
        assert_eq!(&b[29..37], &0.0f64.to_le_bytes());
        assert_eq!(b.len(), 37 + 4 * (2 + 4 + 6) + 3);
        assert_eq!(&b[b.len() - 3..], &[0, 1, 0]);
        assert_eq!(Codebook::from_bytes(&b).unwrap(), cb);
    }

    #[test]
    fn corrupt_codebook_rejected() {
        let mut b = tiny_codebook().to_bytes();
        b[8] = 9;
        assert!(Codebook::from_bytes(&b).is_err());
        let b = tiny_codebook().to_bytes();
        assert!(Codebook::from_bytes(&b[..b.len() - 1]).is_err());
    }

    #[test]
    fn contrast_flag_follows_channel() {
        let mut cb = tiny_codebook();
        assert!(!cb.contrast_normalize());
        cb.channel = Channel::Raw;
        assert!(cb.contrast_normalize());
    }

    #[test]
    fn learned_codebook_invariants() {
        let imgs: Vec<GrayImage> = (0..4)
            .map(|s| GrayImage::from_fn(20, 20, |x, y| ((x * (s + 2) + y * 3) % 11) as f64 / 10.0))
            .collect();
        let cfg = CodebookConfig {
            k: 8,
            patches: 500,
            seed: 5,
            ..Default::default()
        };
        let cb = learn_codebook(&imgs, Channel::Raw, &cfg).unwrap();
        assert_eq!(cb.k(), 8);
        assert!(cb.outlier_mask().iter().any(|&m| !m));
        assert!(cb.centroid_rows().all(|c| c.iter().any(|&v| v != 0.0)));
        assert_eq!(cb, learn_codebook(&imgs, Channel::Raw, &cfg).unwrap());
    }
}
