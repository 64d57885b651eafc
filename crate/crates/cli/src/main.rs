use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qsim_cli::commands::{cmd_gain, cmd_params, cmd_simulate, load, Overrides};
use qsim_cli::config::{parse_dims, SolverChoice};

#[derive(Parser)]
#[command(name = "qsim", version, about = "Three-mode amplifier circuit simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Circuit config file (INI).
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Fock levels per mode, e.g. 6,6,6.
    #[arg(long, value_parser = parse_dims)]
    dims: Option<[usize; 3]>,
    #[arg(long, value_parser = |s: &str| s.parse::<SolverChoice>())]
    solver: Option<SolverChoice>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Dump the coefficient ledger to params.csv.
    Params(Common),
    /// Time evolution and correlation reports.
    Simulate(Common),
    /// Signal and idler gain sweep.
    Gain(Common),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = std::env::var("QSIM_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let (common, run): (Common, fn(&_) -> _) = match cli.command {
        Command::Params(c) => (c, cmd_params),
        Command::Simulate(c) => (c, cmd_simulate),
        Command::Gain(c) => (c, cmd_gain),
    };
    let ov = Overrides {
        out: Some(common.out),
        dims: common.dims,
        solver: common.solver,
        seed: common.seed,
    };
    let result = load(&common.config, &ov).and_then(|l| run(&l));
    match result {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("qsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
