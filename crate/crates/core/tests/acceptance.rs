//! Runs every acceptance check and prints one line each, even under capture.

use std::process::ExitCode;

use twophase::acceptance::{run, CRITERIA};

fn main() -> ExitCode {
    // `cargo test -- --list` and name filters from other targets pass through here
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    twophase::init_parallelism(std::thread::available_parallelism().map_or(1, |n| n.get()));
    let outcomes = run(&CRITERIA, |o| println!("{o}"));
    let failed: Vec<u8> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    if failed.is_empty() {
        println!("acceptance: {} of {} criteria passed", outcomes.len(), outcomes.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
