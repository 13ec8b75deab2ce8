// The file-based workflow behind the `fame` binary, driven from a config
// string: synth, prune, train, predict, eval and report for two variants.
//
// `cargo run --release --example pipeline_commands -- [--quick]`

use fame::harness::commands::{cmd_eval, cmd_predict, cmd_prune, cmd_report, cmd_synth, cmd_train};
use fame::harness::{Settings, Variant};

pub fn run(quick: bool) -> fame::Result<()> {
    let work = std::env::temp_dir().join(format!("fame_pipeline_{}", std::process::id()));
    let mut config = String::from("seed = 3\nsweep_o = 1,5\n");
    if quick {
        config.push_str("synth_classes = 2\nsynth_clean = 40\nsynth_noise = 4\nsynth_dim = 12\nsynth_negatives = 80\nsynth_test = 10\n");
    }
    let mut s = Settings::parse(&config)?;
    s.work_dir = work.clone();

    cmd_synth(&s)?;
    for variant in [Variant::BaselineRaw, Variant::FameLr] {
        s.variant = variant;
        cmd_prune(&s)?;
        cmd_train(&s)?;
        cmd_predict(&s)?;
        cmd_eval(&s)?;
    }
    cmd_report(&s)?;

    let mut names: Vec<String> = std::fs::read_dir(&work)
        .map_err(|e| fame::FameError::io(&work, e))?
        .filter_map(|e| e.ok().map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect();
    names.sort();
    println!("{}", names.join("\n"));
    for v in ["baseline-raw", "fame-lr"] {
        let path = work.join(format!("metrics_{v}.csv"));
        let text = std::fs::read_to_string(&path).map_err(|e| fame::FameError::io(&path, e))?;
        println!("--- metrics_{v}.csv\n{text}");
    }
    std::fs::remove_dir_all(&work).map_err(|e| fame::FameError::io(&work, e))
}

#[allow(dead_code)]
fn main() -> fame::Result<()> {
    run(std::env::args().any(|a| a == "--quick"))
}
