// Image corpus end to end for several codebook sizes: write PGMs and a
// manifest, learn both codebooks, encode, then compare the baseline with
// pruning. Each class gets a few pictures of another class under its label.
//
// `cargo run --release --example centroid_sweep -- [--quick] [--k 1500,2000,2400]`

use std::fmt::Write as _;
use std::path::Path;

use fame::harness::{
    encode_corpus, learn_corpus_codebooks, parse_manifest, run_train_eval, Dataset, Settings, Variant,
};
use fame::image::GrayImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Class `c` is a grating at angle `c * 60` degrees plus pixel noise.
fn picture(class: usize, rng: &mut ChaCha8Rng) -> GrayImage {
    let angle = class as f64 * std::f64::consts::PI / 3.0 + rng.random_range(-0.15..0.15);
    let (freq, phase) = (rng.random_range(0.8..1.1), rng.random_range(0.0..6.3));
    let (dx, dy) = (angle.cos(), angle.sin());
    GrayImage::from_fn(20, 24, |x, y| {
        let s = (freq * (dx * x as f64 + dy * y as f64) + phase).sin();
        (0.5 + 0.35 * s + rng.random_range(-0.1..0.1)).clamp(0.0, 1.0)
    })
}

fn write_corpus(dir: &Path, per_class: usize, noise: usize, seed: u64) -> std::io::Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut manifest = String::new();
    let mut emit = |name: String, source: usize, label: &str, role: &str, rng: &mut ChaCha8Rng| {
        std::fs::write(dir.join(&name), picture(source, rng).to_pgm())?;
        writeln!(manifest, "{name}\t{label}\t{role}").unwrap();
        Ok::<_, std::io::Error>(())
    };
    for c in 0..3 {
        for i in 0..per_class {
            emit(
                format!("c{c}_{i}.pgm"),
                c,
                &format!("class{c}"),
                "class_instance",
                &mut rng,
            )?;
        }
        for i in 0..noise {
            emit(
                format!("c{c}_noise{i}.pgm"),
                (c + 1) % 3,
                &format!("class{c}"),
                "class_instance",
                &mut rng,
            )?;
        }
        for i in 0..per_class / 2 {
            emit(format!("t{c}_{i}.pgm"), c, &format!("class{c}"), "test", &mut rng)?;
        }
    }
    for i in 0..per_class {
        emit(format!("neg{i}.pgm"), 3 + i % 3, "", "global_negative", &mut rng)?;
    }
    Ok(manifest)
}

pub fn run(quick: bool, ks: &[usize]) -> fame::Result<()> {
    let dir = std::env::temp_dir().join(format!("fame_centroid_sweep_{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| fame::FameError::io(&dir, e))?;
    let (per_class, noise) = if quick { (12, 2) } else { (60, 6) };
    let text = write_corpus(&dir, per_class, noise, 7).map_err(|e| fame::FameError::io(&dir, e))?;
    let manifest = parse_manifest(&text)?;

    for &k in ks {
        let s = Settings {
            k,
            rf: 4,
            patches: if quick { 600 } else { 20 * k.max(500) },
            kmeans_iters: if quick { 10 } else { 50 },
            raw_height: 16,
            lbp_height: 24,
            lbp_neighbors: 8,
            lbp_radius: 1.0,
            ..Settings::default()
        };
        let (raw, lbp, _) = learn_corpus_codebooks(&manifest, &dir, &s)?;
        let corpus = encode_corpus(&manifest, &dir, &raw, &lbp, &s)?;
        let data = Dataset::from_matrices(&corpus.train, corpus.negatives, corpus.test)?;
        let mut line = format!("K={k:<5} dim {:<6}", corpus.train.dim());
        for variant in [Variant::BaselineRaw, Variant::FameLr] {
            let out = run_train_eval(&data, variant, &s)?;
            write!(
                line,
                " {} {:.1}%",
                variant.as_str(),
                100.0 * out.report.macro_accuracy
            )
            .unwrap();
        }
        println!("{line}");
    }
    std::fs::remove_dir_all(&dir).map_err(|e| fame::FameError::io(&dir, e))
}

#[allow(dead_code)]
fn main() -> fame::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let quick = args.iter().any(|a| a == "--quick");
    let ks = match args.iter().position(|a| a == "--k") {
        Some(i) => args
            .get(i + 1)
            .map(|v| {
                v.split(',')
                    .map(|k| k.trim().parse().expect("--k takes integers"))
                    .collect()
            })
            .unwrap_or_default(),
        None if quick => vec![4, 8],
        None => vec![16, 32, 64],
    };
    run(quick, &ks)
}
