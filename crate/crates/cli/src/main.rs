use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use secrecy_region_cli::{run, Command, Format, Overrides};

/// Secrecy rate regions of the two-user fading broadcast channel with
/// confidential messages and statistical CSIT.
#[derive(Debug, Parser)]
#[command(name = "secrecy-region", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    #[arg(long)]
    config: PathBuf,
    /// Monte Carlo draws per user.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Replace the configured grid by `n` uniform points on [0, 1].
    #[arg(long)]
    alpha_steps: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Add the Monte Carlo slope check to `lowsnr`.
    #[arg(long)]
    validate: bool,
    /// Report rates in nats instead of bits.
    #[arg(long)]
    nats: bool,
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
    let o = Overrides {
        samples: args.samples,
        seed: args.seed,
        alpha_steps: args.alpha_steps,
        format: args.format,
        validate: args.validate,
        nats: args.nats,
    };
    match run(args.command, &args.config, args.output.as_deref(), &o) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
