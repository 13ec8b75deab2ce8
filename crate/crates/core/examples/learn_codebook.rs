// Learn a whitened k-means patch codebook and pool images into
// five-region triangular features.
//
// `cargo run --example learn_codebook -- [--quick]`

use fame::codebook::{extract_features, learn_codebook, Channel, Codebook, CodebookConfig, OutlierRule};
use fame::image::{lbp_encode, lbp_to_gray, GrayImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn textures(n: usize, size: usize, seed: u64) -> Vec<GrayImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let (fx, fy, phase): (f64, f64, f64) = (
                rng.random_range(0.2..1.2),
                rng.random_range(0.2..1.2),
                rng.random(),
            );
            GrayImage::from_fn(size, size, |x, y| {
                0.5 + 0.4 * (fx * x as f64 + fy * y as f64 + 6.0 * phase).sin()
            })
        })
        .collect()
}

pub fn run(quick: bool) -> fame::Result<()> {
    let (n, size, k) = if quick { (6, 16, 8) } else { (40, 32, 64) };
    let raw = textures(n, size, 1);
    let lbp = raw
        .iter()
        .map(|img| lbp_to_gray(&lbp_encode(img, 8, 1.0)?, 1.0))
        .collect::<fame::Result<Vec<_>>>()?;

    let cfg = CodebookConfig {
        k,
        patches: if quick { 1_000 } else { 20_000 },
        kmeans_iters: if quick { 20 } else { 100 },
        outlier_rule: OutlierRule::High,
        ..CodebookConfig::default()
    };
    let cb_raw = learn_codebook(&raw, Channel::Raw, &cfg)?;
    let cb_lbp = learn_codebook(&lbp, Channel::Lbp, &CodebookConfig { seed: 1, ..cfg })?;
    for cb in [&cb_raw, &cb_lbp] {
        let flagged = cb.outlier_mask().iter().filter(|&&f| f).count();
        println!(
            "{:?} codebook: K={} patch dim {} flagged {flagged}",
            cb.channel(),
            cb.k(),
            cb.patch_dim()
        );
    }

    let restored = Codebook::from_bytes(&cb_raw.to_bytes())?;
    // stored as f32, so a second round trip is exact
    assert_eq!(restored.to_bytes(), cb_raw.to_bytes());

    let feats = extract_features(&raw[0], &lbp[0], &cb_raw, &cb_lbp)?;
    assert_eq!(feats.len(), 2 * 5 * k);
    let nonzero = feats.iter().filter(|&&v| v != 0.0).count();
    println!("feature vector: {} values, {nonzero} nonzero", feats.len());
    Ok(())
}

#[allow(dead_code)]
fn main() -> fame::Result<()> {
    run(std::env::args().any(|a| a == "--quick"))
}
