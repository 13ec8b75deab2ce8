// Baseline against every pruning variant on the synthetic controlled
// experiment: prune, train one-vs-all with cross-validated lambda, test.
//
// `cargo run --release --example controlled_experiment -- [--quick]`

use fame::harness::{run_train_eval, synth_generate, Dataset, Settings, SyntheticSpec, Variant};

pub fn run(quick: bool) -> fame::Result<()> {
    let spec = if quick {
        SyntheticSpec {
            classes: 3,
            clean_per_class: 60,
            noise_per_class: 6,
            dim: 20,
            negatives: 150,
            test_per_class: 20,
            ..SyntheticSpec::default()
        }
    } else {
        SyntheticSpec::default()
    };
    let data = Dataset::from(synth_generate(&spec)?);
    let settings = Settings::default();
    println!(
        "{:<14} {:>7} {:>8} {:>10}",
        "variant", "lambda", "removed", "macro acc"
    );
    for variant in Variant::ALL {
        let out = run_train_eval(&data, variant, &settings)?;
        let removed: usize = out.prune.pools.iter().map(|p| p.eliminated_count()).sum();
        println!(
            "{:<14} {:>7} {:>8} {:>9.2}%",
            variant.as_str(),
            out.trained.lambda,
            removed,
            100.0 * out.report.macro_accuracy
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> fame::Result<()> {
    run(std::env::args().any(|a| a == "--quick"))
}
