use clap::{Args, Parser, Subcommand};
use mdpdt::harness::{self, HarnessConfig, HarnessError, Metric};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "mdpdt", version, about = "MDP_DT simulation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides `experiment.seed_base`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `experiment.replicates`.
    #[arg(long)]
    replicates: Option<usize>,
    /// Worker threads for replicate runs.
    #[arg(long, default_value_t = 1)]
    parallel: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Accuracy, splits and reward over criteria, tests and margins.
    Sweep(Common),
    /// Compare splitting strategies.
    Strategies(Common),
    /// Compare initial trees.
    Grids(Common),
    /// Offline training of several agents on one dataset, then evaluation.
    Compare(Common),
    /// Write a random-action experience log.
    Dataset(Common),
    /// Train MDP_DT offline from an experience log.
    Train {
        #[command(flatten)]
        common: Common,
        /// Experience log (JSON lines).
        #[arg(long)]
        log: PathBuf,
    },
}

fn load(c: &Common) -> Result<HarnessConfig, HarnessError> {
    let mut cfg = HarnessConfig::load(&c.config)?;
    if let Some(seed) = c.seed {
        cfg.experiment.seed_base = seed;
    }
    if let Some(r) = c.replicates {
        cfg.experiment.replicates = r;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn finish(out: &Path, csvs: Vec<PathBuf>) -> Result<(), HarnessError> {
    let script = harness::emit_plot_script(out, &csvs)?;
    for p in &csvs {
        println!("wrote {}", p.display());
    }
    println!("wrote {}", script.display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let online = [Metric::Reward, Metric::Splits, Metric::States, Metric::Accuracy];
    match cli.command {
        Command::Sweep(c) => {
            let cfg = load(&c)?;
            let r = harness::run_sweep(&cfg, c.parallel)?;
            finish(&c.out, r.write(&c.out, &online)?)
        }
        Command::Strategies(c) => {
            let cfg = load(&c)?;
            let r = harness::run_strategies(&cfg, c.parallel)?;
            finish(&c.out, r.write(&c.out, &online)?)
        }
        Command::Grids(c) => {
            let cfg = load(&c)?;
            let r = harness::run_grids(&cfg, c.parallel)?;
            finish(&c.out, r.write(&c.out, &online)?)
        }
        Command::Compare(c) => {
            let cfg = load(&c)?;
            let (r, traces) = harness::run_compare(&cfg, c.parallel)?;
            let mut paths = r.write(&c.out, &[Metric::Reward, Metric::States, Metric::VmsSd])?;
            paths.extend(harness::write_traces(&c.out, &traces)?);
            finish(&c.out, paths)
        }
        Command::Dataset(c) => {
            let cfg = load(&c)?;
            let p = harness::write_dataset(&cfg, &c.out)?;
            println!("wrote {}", p.display());
            Ok(())
        }
        Command::Train { common, log } => {
            let cfg = load(&common)?;
            let agent = harness::train_from_log(&cfg, &log, &common.out)?;
            let model = agent.model();
            println!(
                "trained on {} experiences: {} states, {} splits",
                model.log().len(),
                model.num_states(),
                agent.splitter().journal().total_splits()
            );
            println!("wrote {}", common.out.join("checkpoint.json").display());
            println!("wrote {}", common.out.join("journal.jsonl").display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
