use std::io::{self, Write as _};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use eib_harness::{Invocation, EXIT_NOT_CONVERGED};

/// Elastic information bottleneck experiments.
#[derive(Parser, Debug)]
#[command(name = "eib", version)]
struct Args {
    /// One of: solve, sweep, bounds-sim, toy-transfer, rd-compare, gauss, decompose
    command: String,
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Exit with status 3 when any solve fails to converge.
    #[arg(long)]
    strict: bool,
    /// Worker threads (all cores when absent).
    #[arg(long, env = "EIB_THREADS")]
    threads: Option<usize>,
    /// Override a scalar configuration field, e.g. `--set solver.beta=8`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot set up {n} threads: {e}");
            return ExitCode::from(1);
        }
    }
    let inv = Invocation { command: args.command, config_path: args.config, out_dir: args.out, overrides: args.overrides };
    match eib_harness::run(&inv) {
        Ok(done) => {
            for w in &done.output.warnings {
                eprintln!("warning: {w}");
            }
            // a closed stdout must not turn a finished run into a failure
            let mut out = io::stdout().lock();
            let _ = writeln!(out, "{}", done.output.report);
            let _ = writeln!(out, "wrote {} files to {}", done.manifest.outputs.len() + 1, inv.out_dir.display());
            if args.strict && done.output.not_converged > 0 {
                eprintln!("error: {} solves did not converge", done.output.not_converged);
                return ExitCode::from(EXIT_NOT_CONVERGED as u8);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
