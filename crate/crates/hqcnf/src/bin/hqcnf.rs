use clap::{Parser, Subcommand};

use hqcnf::config::RunConfig;
use hqcnf::runner;

#[derive(Parser)]
#[command(name = "hqcnf", about = "Hybrid quantum-classical normalizing flow")]
struct Cli {
    /// Path to the run configuration file
    #[arg(long, global = true, default_value = "hqcnf.conf")]
    config: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model from scratch and write checkpoints, losses, and samples
    Train,
    /// Draw samples from a trained checkpoint as PGM images
    Generate {
        /// Checkpoint to read (default: <out_dir>/checkpoint.bin)
        #[arg(long)]
        checkpoint: Option<String>,
        /// Number of samples to draw
        #[arg(long, default_value_t = 64)]
        count: usize,
    },
    /// Score a checkpoint against held-out data
    Evaluate {
        /// Checkpoint to read (default: <out_dir>/checkpoint.bin)
        #[arg(long)]
        checkpoint: Option<String>,
    },
    /// Run the internal verification suite
    Check {
        /// Deliberately corrupt the circuit adjoint to prove checks can fail
        #[arg(long, hide = true)]
        corrupt_adjoint: bool,
    },
}

fn run(cli: Cli) -> hqcnf::Result<()> {
    let config = RunConfig::load(&cli.config)?;
    match cli.command {
        Command::Train => runner::cmd_train(&config),
        Command::Generate { checkpoint, count } => {
            runner::cmd_generate(&config, checkpoint.as_deref(), count)
        }
        Command::Evaluate { checkpoint } => {
            runner::cmd_evaluate(&config, checkpoint.as_deref()).map(|_| ())
        }
        Command::Check { corrupt_adjoint } => {
            if runner::cmd_check(&config, corrupt_adjoint)? {
                Ok(())
            } else {
                eprintln!("verification failed");
                std::process::exit(1);
            }
        }
    }
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
