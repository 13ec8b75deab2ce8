use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fame::harness::commands::{self, load_settings};
use fame::harness::Variant;

#[derive(Parser)]
#[command(name = "fame", about = "Weak-label dataset pruning toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured training variant.
    #[arg(long)]
    variant: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic controlled-experiment features.
    Synth(Common),
    /// Learn raw and LBP codebooks from the manifest images.
    Codebook(Common),
    /// Encode manifest images into feature files.
    Encode(Common),
    /// Prune every class pool and write traces.
    Prune(Common),
    /// Train the one-vs-all classifier on the kept instances.
    Train(Common),
    /// Predict test labels with the trained classifier.
    Predict(Common),
    /// Score the classifier, or run k-fold evaluation.
    Eval(Common),
    /// Write outlier count reports and the outlier-rate sweep.
    Report(Common),
}

fn run(cli: Cli) -> fame::Result<()> {
    let (common, action): (&Common, fn(&fame::harness::Settings) -> fame::Result<()>) = match &cli.command {
        Command::Synth(c) => (c, commands::cmd_synth),
        Command::Codebook(c) => (c, commands::cmd_codebook),
        Command::Encode(c) => (c, commands::cmd_encode),
        Command::Prune(c) => (c, commands::cmd_prune),
        Command::Train(c) => (c, commands::cmd_train),
        Command::Predict(c) => (c, commands::cmd_predict),
        Command::Eval(c) => (c, commands::cmd_eval),
        Command::Report(c) => (c, commands::cmd_report),
    };
    let mut settings = load_settings(&common.config)?;
    if let Some(seed) = common.seed {
        settings.set_seed(seed);
    }
    if let Some(v) = &common.variant {
        settings.variant = v.parse::<Variant>()?;
    }
    settings.validate()?;
    action(&settings)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 3 } else { 2 })
        }
    }
}
