// Co-training: split a pool in two, let each half stop on the other
// half's verdict, then merge the eliminations.
//
// `cargo run --release --example cotrain -- [--quick]`

use std::collections::HashSet;

use fame::evolution::{fame_cotrain, fame_run, FameConfig};
use fame::harness::{synth_generate, SyntheticSpec};

pub fn run(quick: bool) -> fame::Result<()> {
    let spec = if quick {
        SyntheticSpec {
            classes: 2,
            clean_per_class: 60,
            noise_per_class: 6,
            dim: 20,
            negatives: 150,
            test_per_class: 10,
            seed: 5,
            ..SyntheticSpec::default()
        }
    } else {
        SyntheticSpec {
            seed: 5,
            ..SyntheticSpec::default()
        }
    };
    let data = synth_generate(&spec)?;
    let pool = data.pools[0].clone();
    let planted: HashSet<u64> = data.planted[0].iter().copied().collect();
    let cfg = FameConfig::default();

    let (merged, [a, b]) = fame_cotrain(pool.clone(), &data.negatives, &cfg)?;
    for (name, half) in [("half A", &a), ("half B", &b)] {
        let acc: Vec<String> = half
            .traces
            .iter()
            .map(|t| format!("{:.3}", t.stop_accuracy))
            .collect();
        println!(
            "{name}: {} instances, {} iterations, cross accuracy [{}]",
            half.pool.m(),
            half.t,
            acc.join(", ")
        );
    }
    let removed: Vec<u64> = merged
        .eliminated_indices()
        .iter()
        .map(|&i| merged.source_id(i))
        .collect();
    let hits = removed.iter().filter(|id| planted.contains(id)).count();
    println!("co-training removed {}, {hits} planted", removed.len());

    let (single, _) = fame_run(pool, &data.negatives, &cfg)?;
    let single_hits = single
        .eliminated_indices()
        .iter()
        .filter(|&&i| planted.contains(&single.source_id(i)))
        .count();
    println!(
        "single run removed {}, {single_hits} planted",
        single.eliminated_count()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> fame::Result<()> {
    run(std::env::args().any(|a| a == "--quick"))
}
