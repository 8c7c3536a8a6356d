use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use qnls::cli::{exit_code, parse_config, run_command, Command};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Sub {
    GroundState,
    Evolve,
    Morawetz,
    Classify,
    Disperse,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::GroundState => Command::GroundState,
            Sub::Evolve => Command::Evolve,
            Sub::Morawetz => Command::Morawetz,
            Sub::Classify => Command::Classify,
            Sub::Disperse => Command::Disperse,
        }
    }
}

/// Numerical lab for the mass-resonant quadratic NLS system.
#[derive(Debug, Parser)]
#[command(name = "qnls", version)]
struct Args {
    #[arg(value_enum)]
    command: Sub,
    /// Flat JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            return ExitCode::from(1);
        }
    };
    let cfg = match parse_config(&text, args.command.into()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e) as u8);
        }
    };
    eprintln!("config: {}", cfg.echo());
    match run_command(&cfg, &args.out) {
        Ok(summary) => {
            print!("{}", qnls::cli::commands::describe(&summary));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
