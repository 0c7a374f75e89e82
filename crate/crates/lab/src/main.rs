use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use qlwe_lab::{find, list_experiments, run, ExperimentConfig};

#[derive(Parser)]
#[command(name = "qlwe-lab", version, about = "Seeded experiments over the qlwe-core simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Enforces the strict parameter conditions.
        #[arg(long)]
        strict: bool,
        /// Also writes hidden per-trial records as `.SECRET.csv` files.
        #[arg(long)]
        emit_hidden: bool,
        /// Worker threads for trials; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// List the registered experiments.
    List,
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::List => {
            print!("{}", list_experiments());
            Ok(true)
        }
        Command::Run { config, seed, out, strict, emit_hidden, jobs } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(o) = out {
                cfg.out_dir = o;
            }
            cfg.strict_mode |= strict;
            cfg.emit_hidden |= emit_hidden;
            let (output, files) = run(&cfg, jobs)?;
            let info = find(&cfg.experiment).expect("run succeeded");
            for id in info.criteria {
                let pass = output.record.pass.get(&format!("criterion_{id}")).copied().unwrap_or(false);
                println!("criterion {id:>2}: {}", if pass { "PASS" } else { "FAIL" });
            }
            for f in files {
                println!("wrote {}", f.display());
            }
            Ok(output.record.all_pass())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
