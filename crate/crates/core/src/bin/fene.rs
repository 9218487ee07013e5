use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fene::diagnostics::{build_report, run_scenario, RunConfig, RunOverrides};
use fene::error::FeneError;

#[derive(Parser)]
#[command(name = "fene", version, about = "FENE dumbbell Navier-Stokes-Fokker-Planck simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a config file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Continue a run from a snapshot.
    Resume {
        checkpoint: PathBuf,
        config: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Summarize a finished run directory.
    Report { run_dir: PathBuf },
}

#[derive(Args)]
struct Flags {
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Stop after this step index.
    #[arg(long)]
    max_steps: Option<u64>,
    /// Blow-up indicator ceiling.
    #[arg(long)]
    ceiling: Option<f64>,
}

impl Flags {
    fn overrides(&self) -> RunOverrides {
        RunOverrides {
            seed: self.seed,
            output: self.output.clone(),
            max_steps: self.max_steps,
            ceiling: self.ceiling,
        }
    }
}

fn execute(config: &Path, checkpoint: Option<&Path>, flags: &Flags) -> Result<i32, FeneError> {
    let mut cfg = RunConfig::load(config)?;
    flags.overrides().apply(&mut cfg);
    cfg.validate()?;
    let summary = run_scenario(&cfg, checkpoint)?;
    match &summary.error {
        None => println!(
            "ok: {} steps, t = {:.6}, output {}",
            summary.steps,
            summary.final_time,
            summary.output.display()
        ),
        Some(e) => eprintln!("error[{}]: {e}", e.reason_code()),
    }
    Ok(summary.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, flags } => execute(config, None, flags),
        Command::Resume {
            checkpoint,
            config,
            flags,
        } => execute(config, Some(checkpoint.as_path()), flags),
        Command::Report { run_dir } => build_report(run_dir).map(|r| {
            println!("{r}");
            0
        }),
    };
    let code = result.unwrap_or_else(|e| {
        eprintln!("error[{}]: {e}", e.reason_code());
        e.exit_code()
    });
    ExitCode::from(code as u8)
}
