// Cumulative correct and false eliminations per iteration for several
// outlier batch sizes.
//
// `cargo run --release --example outlier_sweep -- [--quick]`

use fame::harness::{outlier_sweep, sweep_csv, synth_generate, Dataset, Settings, SyntheticSpec};

pub fn run(quick: bool) -> fame::Result<()> {
    let spec = if quick {
        SyntheticSpec {
            classes: 2,
            clean_per_class: 60,
            noise_per_class: 6,
            dim: 20,
            negatives: 150,
            test_per_class: 10,
            ..SyntheticSpec::default()
        }
    } else {
        SyntheticSpec::default()
    };
    let data = Dataset::from(synth_generate(&spec)?);
    let rows = outlier_sweep(&data, &Settings::default(), &[1, 5, 10])?;
    print!("{}", sweep_csv(&rows));
    Ok(())
}

#[allow(dead_code)]
fn main() -> fame::Result<()> {
    run(std::env::args().any(|a| a == "--quick"))
}
