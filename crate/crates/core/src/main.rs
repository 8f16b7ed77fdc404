use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use stein_pareto::runner::{
    emit_front, emit_table, evaluate_checkpoint, load_records, run_experiment, Checkpoint,
    ExperimentConfig, RunStatus, TableShape,
};
use stein_pareto::{Error, Result};

#[derive(Parser)]
#[command(name = "stein-pareto", version, about = "Pareto set learning with Stein variational hypernetworks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every seed of an experiment config.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Run only this seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print metrics of a checkpoint on an even ray grid as JSON.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        rays: usize,
    },
    /// Aggregate run records into a CSV table on stdout.
    Table {
        /// Glob over record.json files, e.g. "runs/*/*/record.json".
        #[arg(long)]
        glob: String,
        #[arg(long, value_parser = ["med", "hv"])]
        shape: String,
    },
    /// Write the learned front and its rays next to the checkpoint.
    Front {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        rays: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Train { config, seed, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seeds = vec![s];
            }
            if let Some(dir) = out {
                cfg.output_dir = dir;
            }
            let records = run_experiment(&cfg)?;
            let mut code = 0;
            for r in &records {
                match r.status {
                    RunStatus::Ok => {
                        let last = r.metrics.last().expect("at least one ray count");
                        println!(
                            "{} {} seed {}: rays {} hv {:.6} med {} ({:.1}s)",
                            r.method,
                            r.problem,
                            r.seed,
                            last.rays,
                            last.report.hv,
                            last.report.med.map_or("-".into(), |m| format!("{m:.4e}")),
                            r.wall_clock_seconds
                        );
                    }
                    RunStatus::Failed => {
                        eprintln!("{} {} seed {} failed: {}", r.method, r.problem, r.seed, r.error.as_deref().unwrap_or(""));
                        code = 3;
                    }
                }
            }
            println!("{}", cfg.output_dir.join(cfg.hash()).display());
            Ok(code)
        }
        Command::Evaluate { checkpoint, rays } => {
            let ck = Checkpoint::load(&checkpoint)?;
            let report = evaluate_checkpoint(&ck, rays)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serialises"));
            Ok(0)
        }
        Command::Table { glob, shape } => {
            let shape: TableShape = shape.parse()?;
            let records = load_records(&glob)?;
            print!("{}", emit_table(&records, shape)?);
            Ok(0)
        }
        Command::Front { checkpoint, rays, out } => {
            let ck = Checkpoint::load(&checkpoint)?;
            let dir = out.unwrap_or_else(|| checkpoint.parent().map(PathBuf::from).unwrap_or_default());
            let (front, ray_file) = emit_front(&ck, rays, &dir)?;
            println!("{}\n{}", front.display(), ray_file.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_status(&e))
        }
    }
}

fn exit_status(e: &Error) -> u8 {
    e.exit_code() as u8
}
