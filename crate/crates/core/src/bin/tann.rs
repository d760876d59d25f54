use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tann::experiment::{self, Run};

#[derive(Parser)]
#[command(name = "tann", version, about = "Thermodynamics-based neural networks for elasto-plastic materials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample random material states and write a dataset with its split.
    Generate(Common),
    /// Train a TANN, the baseline ANN, or both.
    Train(Common),
    /// Self-fed prediction along a loading path, with a dissipation report.
    Recall(Common),
    /// Train the x² / 2x network once per activation function.
    StudyActivations(Common),
    /// Sweep both models over increasing strain increments.
    Compare(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the experiment seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn run(cmd: Command) -> tann::Result<()> {
    let (Command::Generate(c)
    | Command::Train(c)
    | Command::Recall(c)
    | Command::StudyActivations(c)
    | Command::Compare(c)) = &cmd;
    let r = Run::from_file(&c.config, c.seed, c.out_dir.clone())?;
    match cmd {
        Command::Generate(_) => println!("{}", experiment::generate(&r)?),
        Command::Train(_) => println!("{}", experiment::train(&r)?),
        Command::Recall(_) => println!("{}", experiment::recall(&r)?),
        Command::StudyActivations(_) => {
            for row in experiment::study_activations(&r)? {
                println!(
                    "{:<16} L={:.4e} L_O={:.4e} L_grad={:.4e} epochs={}",
                    row.activation.to_string(),
                    row.loss,
                    row.loss_o,
                    row.loss_grad,
                    row.epochs
                );
            }
        }
        Command::Compare(_) => {
            for row in experiment::compare(&r)? {
                println!(
                    "d_eps={:.0e} sigma RMSE tann={:.4e} ann={:.4e}, min D tann={:.4e} ann={:.4e}",
                    row.d_eps, row.tann_sigma_rmse, row.ann_sigma_rmse, row.tann_min_d, row.ann_min_d
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
