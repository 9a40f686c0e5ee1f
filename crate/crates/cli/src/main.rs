//! `rmt-lab`: exact tables, cycle enumeration, oracles, Monte Carlo runs and
//! the acceptance suite.

mod commands;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rmtlab::Error;

#[derive(Parser, Debug)]
#[command(name = "rmt-lab", version, about = "Random matrix moment experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact number tables as CSV.
    Tables(TablesArgs),
    /// Dominant cycle classes of length 2l, one row per class.
    Enumerate {
        #[arg(long = "l")]
        l: u64,
        #[arg(long)]
        out: Option<std::path::PathBuf>,
    },
    /// Exact expectations by exhaustive enumeration.
    Oracle(OracleArgs),
    /// Monte Carlo experiments from a JSON config.
    Mc {
        #[arg(long)]
        config: std::path::PathBuf,
        #[arg(long)]
        out: std::path::PathBuf,
        /// Worker threads (default: RMT_LAB_THREADS, else all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// The acceptance suite.
    Verify {
        #[arg(long)]
        out: std::path::PathBuf,
        /// Shrunken replicate counts; statistical verdicts are not meaningful.
        #[arg(long)]
        quick: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
        /// Skip the two extra runs that compare 1 and 8 workers.
        #[arg(long)]
        skip_determinism: bool,
    },
    /// Marchenko–Pastur residual tables as CSV.
    Spectral {
        /// Aspect ratios, comma separated.
        #[arg(long, default_value = "0.5,1,2")]
        gamma: String,
        /// Highest moment order compared with the quadrature.
        #[arg(long, default_value_t = 8)]
        k: u32,
        #[arg(long)]
        out: Option<std::path::PathBuf>,
    },
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct TableChoice {
    /// Catalan numbers C_0..C_N.
    #[arg(long, value_name = "N")]
    catalan: Option<u64>,
    /// MP moments beta(k, gamma) for k = 1..K, given as GAMMA,K.
    #[arg(long, value_name = "GAMMA,K")]
    beta: Option<String>,
    /// Variance sums for p = 2..P.
    #[arg(long, value_name = "P")]
    variance: Option<u64>,
    /// Bipartite split counts for cycles of length 2P.
    #[arg(long, value_name = "P")]
    narayana: Option<u64>,
    /// First-vertex multiplicity counts for length 2L.
    #[arg(long, value_name = "L")]
    fcount: Option<u64>,
}

#[derive(Args, Debug)]
struct TablesArgs {
    #[command(flatten)]
    choice: TableChoice,
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    /// Wigner trace mean E tr(A^p), given as n,p.
    #[arg(long, value_name = "n,p", conflicts_with = "wishart")]
    wigner: Option<String>,
    /// Wishart trace mean E tr(A^p), given as n,N,p.
    #[arg(long, value_name = "n,N,p")]
    wishart: Option<String>,
    /// With --wigner: mean and variance of (A^p)_ij instead, given as i,j.
    #[arg(long, value_name = "i,j", requires = "wigner")]
    entry: Option<String>,
    /// rademacher, gaussian, uniform or three_point:B (three_point:b2=R).
    #[arg(long, default_value = "rademacher")]
    law: String,
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::ResourceGuard { .. } => 3,
        Error::NoConvergence { .. } => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("rmt-lab: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
