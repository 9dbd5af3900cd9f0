//! `u2reg`: batch driver for regularity decompositions and their certificates.
//!
//! Exit status: 0 pass, 1 certificate failure, 2 input error, 3 budget exhausted.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches, Parser};

use crate::io::{CliError, CliResult};

#[derive(Parser, Debug, Clone)]
#[command(name = "u2reg", version, about = "Certified U² regularity decompositions on [N]")]
pub struct Args {
    /// Subcommand name (see the list below).
    pub command: String,

    /// Input artifact; `verify` accepts a second one holding `f`.
    #[arg(long)]
    pub input: Vec<PathBuf>,

    /// Output artifact (stdout when omitted).
    #[arg(long)]
    pub output: Option<PathBuf>,

    /// Plot table: (n, f, f_str, f_sml, f_unf) for the decompositions.
    #[arg(long)]
    pub csv: Option<PathBuf>,

    #[arg(long)]
    pub epsilon: Option<f64>,

    /// Growth spec: poly:c,k | exp:c | table:M1=V1,... | inflate:c,<spec>.
    #[arg(long)]
    pub growth: Option<String>,

    #[arg(long = "A")]
    pub a: Option<u64>,

    #[arg(long = "N")]
    pub n: Option<u64>,

    /// Step of the progression {q, 2q, ..., Nq} averaged by `count`.
    #[arg(long)]
    pub q: Option<u64>,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// A values for `count`, e.g. `A=25,50,100,200`.
    #[arg(long)]
    pub sweep: Option<String>,

    /// Torus point as fractions, e.g. `1/3,2/7`.
    #[arg(long)]
    pub theta: Option<String>,

    /// Synthetic input spec, e.g. `0.5*uniform+0.5*cosine:5,64`.
    #[arg(long)]
    pub generator: Option<String>,

    /// Torus dimension of the seeded polynomial used by `count`.
    #[arg(long, default_value_t = 1)]
    pub dim: usize,

    /// Candidates tried per θ search in `count`.
    #[arg(long, default_value_t = 10_000)]
    pub tries: usize,

    #[arg(long, default_value = "fft")]
    pub dft: String,

    #[arg(long = "u2-method", default_value = "spectral")]
    pub u2_method: String,

    /// Maximum integer vectors visited per irrationality scan.
    #[arg(long)]
    pub budget: Option<u64>,
}

fn run() -> CliResult<()> {
    let registry = commands::registry();
    let mut listing = String::from("Commands:\n");
    for name in registry.names() {
        let cmd = registry.get(name).expect("listed");
        listing.push_str(&format!("  {name:<20} {}\n", cmd.about()));
    }
    let matches = Args::command().after_help(listing).try_get_matches();
    let matches = match matches {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return Err(CliError {
                code: if e.use_stderr() { io::EXIT_INPUT } else { 0 },
                message: String::new(),
            });
        }
    };
    let args = Args::from_arg_matches(&matches).map_err(|e| CliError::input(e.to_string()))?;
    let cmd = registry.get(&args.command)?;
    cmd.run(&args)
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !e.message.is_empty() {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.code as u8)
        }
    }
}
