//! Command-line harness around the `anorand` library: data generation,
//! training, scoring, evaluation, parameter sweeps and detector comparisons.
//!
//! Every command writes `<output>.manifest.json` beside each output file with
//! the full flag set, seed, paths, tool version and timestamps.

pub mod args;
pub mod commands;
pub mod harness;
pub mod manifest;
pub mod sweep;

use args::{Cli, Command};
use commands::SweepKind;

pub fn run(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Train(a) => commands::train(a),
        Command::Score(a) => commands::score(a),
        Command::Eval(a) => commands::eval(a),
        Command::SweepW(a) => commands::run_sweep(SweepKind::W, a).map(|_| ()),
        Command::SweepNoise(a) => commands::run_sweep(SweepKind::Noise, a).map(|_| ()),
        Command::Bench(a) => {
            let (_, ranks) = commands::bench(a)?;
            for r in ranks {
                println!(
                    "{:>3}  {:<20} {:<16} pr_auc {:.4}  roc_auc {:.4}  fit {:.3}s",
                    r.rank, r.dataset, r.detector, r.mean_pr_auc, r.mean_roc_auc, r.mean_fit_seconds
                );
            }
            Ok(())
        }
    }
}
