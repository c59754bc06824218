use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use thq_cli::{output::event, CliError};

#[derive(Parser)]
#[command(name = "thq", version, about = "Nuclear-level qubit simulations from TOML configs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiments named in a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a bundled preset.
    Reproduce {
        #[arg(long, value_enum)]
        preset: Preset,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Fig1,
    Fig3,
    Fig4,
}

impl Preset {
    fn name(self) -> &'static str {
        match self {
            Preset::Fig1 => "fig1",
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    thq_cli::init_workers()?;
    match cli.command {
        Command::Run { config, out, seed } => {
            let manifest = thq_cli::run_file(&config, out.as_deref(), seed)?;
            println!("{}", manifest.display());
        }
        Command::Reproduce { preset, out } => {
            let manifest = thq_cli::reproduce(preset.name(), out.as_deref())?;
            println!("{}", manifest.display());
        }
        Command::Validate { config } => {
            let cfg = thq_cli::validate(&config)?;
            let kinds: Vec<_> = cfg.experiments.iter().map(|k| k.name()).collect();
            event("valid", serde_json::json!({ "config": config.display().to_string(), "experiments": kinds }));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = e.exit_code();
            event("error", serde_json::json!({ "code": code, "kind": e.kind(), "message": e.to_string() }));
            ExitCode::from(code as u8)
        }
    }
}
