//! Command-line front end for the constrained-DAE dilation testbed.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use zenodae_cli::config::{self, ExperimentConfig};
use zenodae_cli::suites::{self, RunOptions, SuiteError};

/// Exit codes: 0 success, 2 config error, 3 invariant violation,
/// 4 capacity exceeded, 5 I/O error.
#[derive(Parser)]
#[command(
    name = "zenodae",
    version,
    about = "Projected-evolution testbed for constrained linear DAEs",
    after_help = "Exit codes: 0 success, 2 config error, 3 invariant violation, \
4 capacity exceeded, 5 I/O error.\n\nThe environment variable ZENO_DAE_SEED \
overrides the config seed."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an experiment config and write deterministic CSV tables.
    Run {
        /// Path to a `key = value` config file.
        config: PathBuf,
        /// Output directory (default: the config's `out` key, else `.`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Thread-pool size for sweep evaluation.
        #[arg(long)]
        threads: Option<usize>,
        /// Also write staggered-grid operator triple lists (stokes suite).
        #[arg(long)]
        dump_operators: bool,
    },
    /// Run the cross-module invariant battery and report pass/fail lines.
    Check,
}

fn main() -> ExitCode {
    match Cli::parse().cmd {
        Cmd::Run {
            config,
            out,
            threads,
            dump_operators,
        } => run(config, out, threads, dump_operators),
        Cmd::Check => run_check(),
    }
}

fn run(
    config_path: PathBuf,
    out: Option<PathBuf>,
    threads: Option<usize>,
    dump_operators: bool,
) -> ExitCode {
    if let Some(n) = threads {
        // ignore the error if a global pool already exists
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let text = match std::fs::read_to_string(&config_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", config_path.display());
            return ExitCode::from(5);
        }
    };
    let mut cfg: ExperimentConfig = match config::parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", config_path.display());
            return ExitCode::from(2);
        }
    };
    if let Ok(seed_text) = std::env::var("ZENO_DAE_SEED") {
        match seed_text.parse::<u64>() {
            Ok(seed) => cfg.seed = seed,
            Err(_) => {
                eprintln!("error: ZENO_DAE_SEED must be an integer, got '{seed_text}'");
                return ExitCode::from(2);
            }
        }
    }
    let out_dir = out
        .or_else(|| cfg.output_path.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let opts = RunOptions {
        out_dir,
        dump_operators,
    };
    match suites::run_suite(&cfg, &opts) {
        Ok(report) => {
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run_check() -> ExitCode {
    let results = suites::run_check();
    let mut failed = 0;
    for r in &results {
        println!(
            "{} {} ({})",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        );
        if !r.pass {
            failed += 1;
        }
    }
    if failed == 0 {
        println!("all {} checks passed", results.len());
        ExitCode::SUCCESS
    } else {
        eprintln!("FAIL kind=invariant suite=check failed={failed}");
        let _ = SuiteError::Invariant(String::new());
        ExitCode::from(3)
    }
}
