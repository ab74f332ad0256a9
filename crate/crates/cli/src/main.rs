use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use uelink_cli::{execute, load_config, write_artifact, CliError, Command};

#[derive(Parser)]
#[command(
    name = "uelink",
    version,
    about = "Link-level experiments for OFDM blocks with two constellation orders"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// BER against SNR for the all-low, all-high and split blocks
    BerSweep(Common),
    /// 16QAM BER over the correlated Nakagami channel for each ρ
    RhoSweep(Common),
    /// AWGN tables, per-MCS β calibration and SNR_eff(β) curves
    EesmCalibrate(Common),
    /// Tabulate one closed-form fading quantity on a grid
    Analytic(Common),
    /// Closed-loop MCS adaptation trace with throughput and feedback summary
    AdaptTrace(Common),
}

#[derive(clap::Args)]
struct Common {
    /// Experiment configuration file
    #[arg(long)]
    config: PathBuf,
    /// Override the configured seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (cmd, args) = match cli.command {
        Cmd::BerSweep(a) => (Command::BerSweep, a),
        Cmd::RhoSweep(a) => (Command::RhoSweep, a),
        Cmd::EesmCalibrate(a) => (Command::EesmCalibrate, a),
        Cmd::Analytic(a) => (Command::Analytic, a),
        Cmd::AdaptTrace(a) => (Command::AdaptTrace, a),
    };
    let cfg = load_config(&args.config, args.seed)?;
    let art = execute(cmd, &cfg)?;
    write_artifact(&art, args.out.as_deref())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("uelink: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
