use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "lapdecay", version, about = "Weighted resolvent and local energy decay experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// TOML experiment configuration.
    config: PathBuf,
    /// `section.key=value`, applied after the file is read.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Weight inequalities, Carleman ratios and conjugated resolvent scalings.
    CarlemanVerify(RunArgs),
    /// Weighted resolvent norms over a frequency grid.
    ResolventSweep(RunArgs),
    /// Free kernel identities and lattice convergence.
    KernelCheck(RunArgs),
    /// Continued resolvent evaluated below, on and above the real axis.
    Continue(RunArgs),
    /// Minimum singular value map of the continuation system.
    PoleScan(RunArgs),
    /// Cauchy-integral derivative growth of the continued resolvent.
    DerivBounds(RunArgs),
    /// Frequency cutoff families and their derivative constants.
    CutoffBuild(RunArgs),
    /// Almost-analytic functional calculus against eigendecomposition.
    HsCheck(RunArgs),
    /// Weighted local energy decay and wave identities.
    WaveDecay(RunArgs),
    /// Hardy inequality ratios.
    Hardy(RunArgs),
}

impl Command {
    fn split(&self) -> (&'static str, &RunArgs) {
        match self {
            Command::CarlemanVerify(a) => ("carleman-verify", a),
            Command::ResolventSweep(a) => ("resolvent-sweep", a),
            Command::KernelCheck(a) => ("kernel-check", a),
            Command::Continue(a) => ("continue", a),
            Command::PoleScan(a) => ("pole-scan", a),
            Command::DerivBounds(a) => ("deriv-bounds", a),
            Command::CutoffBuild(a) => ("cutoff-build", a),
            Command::HsCheck(a) => ("hs-check", a),
            Command::WaveDecay(a) => ("wave-decay", a),
            Command::Hardy(a) => ("hardy", a),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = cli.command.split();
    match lapdecay_cli::run(name, &args.config, &args.overrides) {
        Ok(w) => {
            println!("{}", w.csv.display());
            println!("{}", w.manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("lapdecay {name}: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
