// Decode a PGM, resize it, mirror it and turn it into a smoothed
// rotation-invariant LBP image.
//
// `cargo run --example image_pipeline`

use fame::image::{hflip, lbp_encode, lbp_to_gray, load_pgm, resize_bilinear, rotation_min, GrayImage};

pub fn run(quick: bool) -> fame::Result<()> {
    let (w, h) = if quick { (24, 32) } else { (96, 128) };
    let picture = GrayImage::from_fn(w, h, |x, y| {
        let (u, v) = (x as f64 / w as f64, y as f64 / h as f64);
        0.5 + 0.25 * (12.0 * u).sin() * (9.0 * v).cos() + 0.2 * v
    });
    let decoded = load_pgm(&picture.to_pgm())?;
    println!(
        "decoded {}x{} from {} PGM bytes",
        decoded.width(),
        decoded.height(),
        picture.to_pgm().len()
    );

    let small = resize_bilinear(&decoded, h / 2)?;
    println!("resized to {}x{}", small.width(), small.height());
    let mirrored = hflip(&small);
    assert_eq!(hflip(&mirrored), small);

    let lbp = lbp_encode(&small, 8, 1.0)?;
    let mut hist = vec![0usize; lbp.max_code() as usize + 1];
    for &c in lbp.codes() {
        hist[c as usize] += 1;
    }
    let used = hist.iter().filter(|&&n| n > 0).count();
    println!(
        "LBP(P=8, R=1): {} codes, {used} distinct values",
        lbp.codes().len()
    );
    println!(
        "rotation_min(0b0110_0000, 8) = {:#010b}",
        rotation_min(0b0110_0000, 8)
    );

    let smooth = lbp_to_gray(&lbp, 1.0)?;
    let mean = smooth.pixels().iter().sum::<f64>() / smooth.pixels().len() as f64;
    println!(
        "smoothed LBP image {}x{}, mean {mean:.3}",
        smooth.width(),
        smooth.height()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> fame::Result<()> {
    run(std::env::args().any(|a| a == "--quick"))
}
