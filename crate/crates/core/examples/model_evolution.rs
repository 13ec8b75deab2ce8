// Prune one weakly labelled class pool by iterative model evolution and
// check the eliminations against the planted noise.
//
// `cargo run --release --example model_evolution -- [--quick]`

use std::collections::HashSet;

use fame::evolution::{fame_run, parse_trace, write_trace, FameConfig, Scoring};
use fame::harness::{synth_generate, SyntheticSpec};
use fame::linear::Loss;

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
    let data = synth_generate(&spec)?;
    let pool = data.pools[0].clone();
    let planted: HashSet<u64> = data.planted[0].iter().copied().collect();

    for (scoring, loss) in [
        (Scoring::TwoModel, Loss::Logistic),
        (Scoring::TwoModel, Loss::SquaredHinge),
        (Scoring::M1Only, Loss::Logistic),
    ] {
        let cfg = FameConfig {
            scoring,
            loss,
            ..FameConfig::default()
        };
        let (pruned, state) = fame_run(pool.clone(), &data.negatives, &cfg)?;
        let removed = state.eliminated_ids();
        let hits = removed.iter().filter(|id| planted.contains(id)).count();
        println!(
            "{scoring:?}/{loss:?}: {} iterations, stop {:?}, removed {} of {}, {hits} planted (of {})",
            state.t,
            state.stop_reason,
            pruned.eliminated_count(),
            pruned.m(),
            planted.len()
        );
        for t in &state.traces {
            println!(
                "  iter {}: M1 accuracy {:.3}, eliminated {:?}",
                t.iteration, t.m1_accuracy, t.outliers
            );
        }
        let text = write_trace(&state.traces);
        assert_eq!(parse_trace(&text)?, state.traces);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> fame::Result<()> {
    run(std::env::args().any(|a| a == "--quick"))
}
