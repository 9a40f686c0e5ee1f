//! One line per acceptance criterion; exits nonzero if any fails.
//! `RMT_LAB_THREADS` sets the worker count of the full run.

use std::process::ExitCode;
use std::time::Instant;

use rmtlab::mcengine::resolve_workers;
use rmtlab_suite::{format_line, run_all};

fn main() -> ExitCode {
    // cargo may pass harness flags such as --list
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let started = Instant::now();
    let workers = match resolve_workers(None) {
        Ok(w) => w,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    let criteria = match run_all(workers) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("acceptance suite failed to run: {e}");
            return ExitCode::FAILURE;
        }
    };
    for c in &criteria {
        println!("{}", format_line(c));
    }
    let failed: Vec<String> = criteria
        .iter()
        .filter(|c| !c.pass)
        .map(|c| c.id.to_string())
        .collect();
    println!(
        "acceptance: {} of {} criteria pass ({:.0} s, {workers} workers)",
        criteria.len() - failed.len(),
        criteria.len(),
        started.elapsed().as_secs_f64()
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing criteria {}", failed.join(", "));
        ExitCode::FAILURE
    }
}
