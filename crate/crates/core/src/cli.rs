//! Command-line front end. Exit status 0 on success, 2 on usage or
//! validation errors, 1 on runtime errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::pipeline::{run_pipeline, Command};
use crate::report::{OutputFormat, Report};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "erglab", version, about = "Birkhoff-average deviation sets: rate fits, covers and dimension bounds")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Monte Carlo deviation ladders only.
    Simulate(RunArgs),
    /// Ladders and rate-function fits.
    LdpFit(RunArgs),
    /// Fits and the dimension bound.
    Dimension(RunArgs),
    /// Fits, bound, cover ladder and box-counting verdict.
    Cover(RunArgs),
    /// Ball-lemma and flow reduction checks.
    Verify(RunArgs),
    /// The full pipeline.
    Report(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Output directory; beats the config and the ERGLAB_OUT variable.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads. Results do not depend on it.
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,
    #[arg(long, value_enum, default_value = "json")]
    format: OutputFormat,
}

impl Sub {
    fn split(self) -> (Command, RunArgs) {
        match self {
            Sub::Simulate(a) => (Command::Simulate, a),
            Sub::LdpFit(a) => (Command::LdpFit, a),
            Sub::Dimension(a) => (Command::Dimension, a),
            Sub::Cover(a) => (Command::Cover, a),
            Sub::Verify(a) => (Command::Verify, a),
            Sub::Report(a) => (Command::Report, a),
        }
    }
}

fn write_report(report: &Report, dir: &Path, format: OutputFormat) -> Result<(), i32> {
    match report.write(dir, format) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
        Err(e) => {
            eprintln!("error: cannot write to {}: {e}", dir.display());
            Err(EXIT_RUNTIME)
        }
    }
}

fn summarize(report: &Report) {
    for e in &report.experiments {
        let mut line = format!("alpha {}", e.alpha);
        if let Some(f) = e.half_fit.as_ref().and_then(|f| f.fit()) {
            line.push_str(&format!("  h(alpha/2) {:.6} (r2 {:.4})", f.h, f.r_squared));
        }
        if let Some(d) = &e.dimension {
            match d.d0 {
                Some(d0) => line.push_str(&format!("  d0 {d0:.6}")),
                None => line.push_str("  d0 n/a"),
            }
            line.push_str(&format!("  verdict {}", d.verdict.as_str()));
        }
        println!("{line}");
    }
}

/// Parses `argv` (program name first) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let (command, args) = cli.command.split();
    let mut config = match ExperimentConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let out_dir = config.resolve_output_dir(args.out.as_deref());

    let result = match args.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n as usize).build() {
            Ok(pool) => pool.install(|| run_pipeline(&config, command)),
            Err(e) => {
                eprintln!("error: cannot start {n} worker threads: {e}");
                return EXIT_RUNTIME;
            }
        },
        None => run_pipeline(&config, command),
    };
    match result {
        Ok(report) => {
            if let Err(code) = write_report(&report, &out_dir, args.format) {
                return code;
            }
            summarize(&report);
            EXIT_OK
        }
        Err(err) => {
            eprintln!("error: {err}");
            let _ = write_report(&err.partial, &out_dir, args.format);
            if err.stage == "setup" {
                EXIT_USAGE
            } else {
                EXIT_RUNTIME
            }
        }
    }
}
