//! Runs the full acceptance suite and prints one line per check.

use std::process::ExitCode;

fn main() -> ExitCode {
    // `cargo test` passes harness flags; only a filter of check numbers is honoured.
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let only = (!only.is_empty()).then_some(only);
    let outcomes = cosserat_study::acceptance::run_all(only.as_deref(), |o| println!("{}", o.line()));
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("acceptance: {} passed, {} failed", outcomes.len() - failed, failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
