//! `mcguire`: command-line front end of the impurity Green's function
//! library. Two subcommands share one flag set: `compute` evaluates
//! G↓(x,t) over an (x, t) grid, `validate` runs the numerical oracle
//! suites. See `--help` for flags, units, and exit codes.

mod compute;
mod config;
mod suites;

use clap::Parser;
use config::{Cli, Command, Mode, RunConfig};

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version are "errors" to clap but successes to
            // the shell; everything else is a configuration error.
            let code = if e.use_stderr() { compute::EXIT_CONFIG } else { compute::EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let (args, is_validate) = match &cli.command {
        Command::Compute(a) => (a, false),
        Command::Validate(a) => (a, true),
    };
    let cfg = match RunConfig::assemble(args, is_validate) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("error: {msg}");
            return compute::EXIT_CONFIG;
        }
    };
    if let Some(n) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return compute::EXIT_CONFIG;
        }
    }
    match cfg.mode {
        Mode::Validate => suites::run(&cfg),
        _ => compute::run(&cfg),
    }
}
