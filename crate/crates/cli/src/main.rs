use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sgbd_cli::{execute, CliError, ExperimentConfig, Kind};

#[derive(Parser)]
#[command(name = "sgbd", version, about = "Stochastic gradient Barker and Langevin experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Root seed, overriding the config's.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one chain: samples.csv, tau_trace.csv, diagnostics.csv.
    Run(Common),
    /// Step-size sweep: sweep.csv.
    Sweep(Common),
    /// Estimator curves against the increment: estimator_curve.csv.
    Curve(Common),
    /// Skew-normal, heavy-tail or logistic-regression study.
    Study(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (expected, args): (&[Kind], Common) = match cli.command {
        Command::Run(a) => (&[Kind::Run], a),
        Command::Sweep(a) => (&[Kind::Sweep], a),
        Command::Curve(a) => (&[Kind::Curve], a),
        Command::Study(a) => (&[Kind::SkewStudy, Kind::HeavytailStudy, Kind::LogregStudy], a),
    };
    match run(expected, &args) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("sgbd: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(expected: &[Kind], args: &Common) -> Result<Vec<PathBuf>, CliError> {
    let (mut config, source) = ExperimentConfig::load(&args.config)?;
    if !expected.contains(&config.kind) {
        return Err(CliError::Config(format!(
            "config kind `{}` does not match this subcommand",
            config.kind.name()
        )));
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let base_dir = args.config.parent().map(PathBuf::from).unwrap_or_default();
    Ok(execute(&config, &source, &base_dir, &args.out)?.files)
}
