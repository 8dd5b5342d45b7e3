use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use topo_smear_cli::commands;
use topo_smear_cli::config::RunConfig;
use topo_smear_cli::Result;

/// Smeared topological optimization of 2D scalar fields.
#[derive(Parser)]
#[command(name = "stump", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// Flat key = value config file; flags override its entries.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[command(flatten)]
    flags: RunConfig,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        cfg.overlay(&self.flags);
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Optimize a field; writes final.csv, final.png, loss_log.csv, diagram.csv.
    Run(ConfigArgs),
    /// STUMP against vanilla on one input; writes bench.csv.
    Bench(ConfigArgs),
    /// Critical smear heatmaps; writes heat_birth.csv, heat_death.csv, heat.png.
    Smearvis(ConfigArgs),
    /// Write a synthetic image as <kind>.csv and <kind>.png.
    Gen {
        /// wells, circle or blobs
        kind: String,
        #[arg(long, default_value_t = 64)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        n_points: Option<usize>,
        #[arg(long)]
        n_blobs: Option<usize>,
        #[arg(long, default_value = ".")]
        output: PathBuf,
    },
    /// Print the persistence diagram of the input as CSV.
    Diagram(ConfigArgs),
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(a) => {
            let res = commands::run(&a.resolve()?)?;
            if let Some(last) = res.output.log.last() {
                eprintln!("step {}: total loss {}", last.step, last.losses.total);
            }
        }
        Command::Bench(a) => {
            let points = commands::bench(&a.resolve()?)?;
            for arm in ["stump", "vanilla"] {
                if let Some(p) = points.iter().rev().find(|p| p.arm == arm) {
                    eprintln!(
                        "{arm}: {} steps, {:.0} ms, loss reduced {:.1}%",
                        p.step, p.elapsed_ms, p.reduction_pct
                    );
                }
            }
        }
        Command::Smearvis(a) => {
            commands::smearvis(&a.resolve()?)?;
        }
        Command::Gen {
            kind,
            size,
            seed,
            n_points,
            n_blobs,
            output,
        } => {
            let cfg = RunConfig {
                size: Some(size),
                gen_seed: Some(seed),
                n_points,
                n_blobs,
                ..RunConfig::default()
            };
            commands::gen(&kind, &cfg, &output)?;
        }
        Command::Diagram(a) => print!("{}", commands::diagram(&a.resolve()?)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
