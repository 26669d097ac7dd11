use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sciopt_harness::{cmd_compare, cmd_gen_data, cmd_hybrid, cmd_train, key_reference, ExperimentConfig, Result};

#[derive(Parser)]
#[command(name = "sciopt", version, about = "Second-order training experiments for small surrogate models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    precision: Option<String>,
    /// Further `--key value` overrides, e.g. `--solver.kind lbfgs`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    overrides: Vec<String>,
}

#[derive(Args)]
struct CompareArgs {
    /// One configuration file per run.
    #[arg(long = "config", required = true)]
    configs: Vec<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    precision: Option<String>,
    /// Overrides applied to every run.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset file.
    GenData(Common),
    /// Train one model.
    Train(Common),
    /// Warm-start a solver with the reference solver.
    Hybrid(Common),
    /// Run several configurations and tabulate their minima.
    Compare(CompareArgs),
    /// Print every configuration key with its default.
    Keys,
}

fn overrides(seed: Option<u64>, out_dir: &Option<PathBuf>, precision: &Option<String>, rest: &[String]) -> Vec<String> {
    let mut args = Vec::new();
    if let Some(s) = seed {
        args.extend(["--seed".to_string(), s.to_string()]);
    }
    if let Some(d) = out_dir {
        args.extend(["--out_dir".to_string(), d.display().to_string()]);
    }
    if let Some(p) = precision {
        args.extend(["--precision".to_string(), p.clone()]);
    }
    args.extend(rest.iter().cloned());
    args
}

fn load(c: &Common) -> Result<ExperimentConfig> {
    ExperimentConfig::load(c.config.as_deref(), &overrides(c.seed, &c.out_dir, &c.precision, &c.overrides))
}

fn run(cli: Cli) -> Result<()> {
    let mut stdout = std::io::stdout();
    match cli.command {
        Command::GenData(c) => cmd_gen_data(&load(&c)?, &mut stdout).map(drop),
        Command::Train(c) => cmd_train(&load(&c)?, &mut stdout).map(drop),
        Command::Hybrid(c) => cmd_hybrid(&load(&c)?, &mut stdout).map(drop),
        Command::Compare(c) => {
            let extra = overrides(c.seed, &None, &c.precision, &c.overrides);
            let cfgs = c
                .configs
                .iter()
                .map(|p| ExperimentConfig::load(Some(p), &extra))
                .collect::<Result<Vec<_>>>()?;
            let root = c.out_dir.clone().unwrap_or_else(|| cfgs[0].out_dir.clone());
            cmd_compare(&cfgs, &root, &mut stdout).map(drop)
        }
        Command::Keys => {
            print!("{}", key_reference());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
