use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mixcert::harness::{
    cmd_certify, cmd_generate, cmd_rademacher, cmd_train, cmd_validate, CommandOutput,
    ExperimentConfig,
};
use mixcert::Error;

#[derive(Parser)]
#[command(
    name = "mixcert",
    version,
    about = "Generalization certificates for networks trained on non-stationary mixing sequences"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the training sequence and target set for every seed
    Generate(Common),
    /// Train one network per seed
    Train(Common),
    /// Compute certificates and population estimates for every seed and margin
    Certify(Common),
    /// Run the configured inequality validators
    Validate(Common),
    /// Estimate empirical Rademacher complexity of the built-in function classes
    Rademacher(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's output_dir
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn print_files(output: &CommandOutput) {
    for (name, digest) in &output.files {
        println!("{digest}  {name}");
    }
}

fn run(cli: Cli) -> mixcert::Result<()> {
    let common = match &cli.command {
        Command::Generate(c)
        | Command::Train(c)
        | Command::Certify(c)
        | Command::Validate(c)
        | Command::Rademacher(c) => c,
    };
    let config = ExperimentConfig::load(&common.config)?;
    let out = common
        .out
        .clone()
        .unwrap_or_else(|| config.output_dir.clone());
    let jobs = common.jobs;
    match cli.command {
        Command::Generate(_) => print_files(&cmd_generate(&config, &out, jobs)?),
        Command::Train(_) => print_files(&cmd_train(&config, &out, jobs)?),
        Command::Certify(_) => {
            let (reports, output) = cmd_certify(&config, &out, jobs)?;
            print_files(&output);
            let held = reports
                .iter()
                .filter(|r| r.bound_holds == Some(true))
                .count();
            eprintln!("bound held in {held}/{} runs", reports.len());
        }
        Command::Validate(_) => {
            let (summary, output) = cmd_validate(&config, &out, jobs)?;
            print_files(&output);
            eprintln!("{} flagged violations", summary.violations());
        }
        Command::Rademacher(_) => print_files(&cmd_rademacher(&config, &out, jobs)?.1),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidSpec(_)
                | Error::Json(_)
                | Error::BadDelta(_)
                | Error::NonpositiveGamma(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
