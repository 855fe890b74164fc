//! `hecke`: batch front end for the hecke-qf library.
//!
//! Exit codes: 0 success, 1 gate failure or computation error, 2 usage
//! error.

mod commands;
mod config;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand};

use crate::config::{parse_count, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "hecke", version, about = "Hecke eigenvalues on integers represented by binary quadratic forms")]
pub struct Cli {
    /// File of `key = value` lines supplying any long flag not given on the
    /// command line.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Directory of coefficient caches, created on first use.
    #[arg(long, global = true, default_value = "hecke-cache")]
    pub cache_dir: PathBuf,

    /// Worker count. Every operation currently runs on one thread.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,

    /// Seed of the sampled checks.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Accept discriminants outside the class-number-one list and leave
    /// the decision to the library.
    #[arg(long, global = true)]
    pub force: bool,

    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// List the catalog forms and the class-number-one discriminants.
    Catalog {
        #[arg(long)]
        json: bool,
    },
    /// Run the gate suite and write a JSON report.
    Verify {
        /// Cap the data-dependent gates at X = 10^4.
        #[arg(long)]
        quick: bool,
    },
    /// Coefficients a(n) and lambda(n) as CSV.
    Coeffs {
        #[arg(long)]
        form: String,
        #[arg(long, value_parser = parse_count)]
        xmax: u64,
    },
    /// S*(X) at dyadic checkpoints as CSV.
    Sum {
        #[arg(long)]
        form: String,
        #[arg(long, allow_negative_numbers = true)]
        disc: i64,
        #[arg(long, value_parser = parse_count)]
        xmax: u64,
        /// First checkpoint is 2^lo_exp.
        #[arg(long, default_value_t = 10)]
        lo_exp: u32,
    },
    /// E_eta(X) with its main term at dyadic checkpoints as CSV.
    EtaMean {
        #[arg(long)]
        eta: u32,
        #[arg(long, allow_negative_numbers = true)]
        disc: i64,
        /// Catalog form whose level restricts the sum.
        #[arg(long, default_value = "delta")]
        form: String,
        #[arg(long, value_parser = parse_count)]
        xmax: u64,
        #[arg(long, default_value_t = 10)]
        lo_exp: u32,
        /// Primes below this bound enter the Euler product for P(1).
        #[arg(long, value_parser = parse_count, default_value = "1000000")]
        p_cut: u64,
    },
    /// Solve the delay equation for sigma up to umax.
    Sigma {
        #[arg(long, default_value_t = 4.0 / 3.0)]
        umax: f64,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        /// Terms of the series solution.
        #[arg(long, default_value_t = 8)]
        terms: usize,
        /// Prescribe sigma(u) = u on (0, x] instead of solving there.
        #[arg(long, value_name = "X")]
        prescribe_until: Option<f64>,
        /// Also write the marched grid as CSV.
        #[arg(long, value_name = "FILE")]
        grid_csv: Option<PathBuf>,
    },
    /// Least represented n coprime to the level with lambda(n) < 0.
    SignChange {
        #[arg(long)]
        form: String,
        #[arg(long, allow_negative_numbers = true)]
        disc: i64,
        #[arg(long, value_parser = parse_count, default_value = "10000")]
        xmax: u64,
        /// Scan squarefree n only.
        #[arg(long)]
        squarefree: bool,
    },
    /// Log-log slope of |S*(X)| over dyadic checkpoints.
    Slope {
        #[arg(long)]
        form: String,
        #[arg(long, allow_negative_numbers = true)]
        disc: i64,
        #[arg(long, value_parser = parse_count, default_value = "1048576")]
        xmax: u64,
        #[arg(long, default_value_t = 14)]
        lo_exp: u32,
    },
}

/// Long flag names accepted by `sub` (plus the global ones), mapped to
/// whether each is a switch.
fn accepted_flags(sub: Option<&str>) -> BTreeMap<String, bool> {
    let root = Cli::command();
    let mut args: Vec<&clap::Arg> = root.get_arguments().collect();
    if let Some(cmd) = sub.and_then(|s| root.find_subcommand(s)) {
        args.extend(cmd.get_arguments());
    }
    args.into_iter()
        .filter_map(|a| {
            let switch = matches!(a.get_action(), clap::ArgAction::SetTrue);
            a.get_long().map(|l| (l.to_string(), switch))
        })
        .collect()
}

/// Apply `--config FILE` by appending its entries as flags.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let strings: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut path = None;
    for (i, a) in strings.iter().enumerate() {
        if a == "--config" {
            path = strings.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else {
        return Ok(args);
    };
    let file = config::read_config_file(std::path::Path::new(&path))?;
    let names: Vec<String> = Cli::command()
        .get_subcommands()
        .map(|c| c.get_name().to_string())
        .collect();
    let sub = strings.iter().skip(1).find(|s| names.contains(s)).map(String::as_str);
    config::merge_config_args(args, &file, &accepted_flags(sub))
}

fn main() -> ExitCode {
    let args = match expand_config(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let run = RunConfig {
        command: String::new(),
        out: cli.out.clone(),
        cache_dir: cli.cache_dir.clone(),
        threads: cli.threads,
        seed: cli.seed,
        force: cli.force,
        ..Default::default()
    };
    match commands::dispatch(&cli.command, run) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
