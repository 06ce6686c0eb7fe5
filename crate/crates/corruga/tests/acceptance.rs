//! Runs every acceptance criterion and prints one line per criterion.

use std::process::ExitCode;

use corruga::verify::{run, Suite};

fn main() -> ExitCode {
    // `cargo test -- --list` and filters other than ours run nothing
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    if let Some(filter) = args.iter().find(|a| !a.starts_with('-')) {
        if !"acceptance".contains(filter.as_str()) {
            return ExitCode::SUCCESS;
        }
    }
    let summary = match run(Suite::All, 2024) {
        Ok(s) => s,
        Err(e) => {
            println!("acceptance suite could not run: {e}");
            return ExitCode::FAILURE;
        }
    };
    for c in &summary.criteria {
        println!("{}", c.line());
    }
    let failed = summary.criteria.iter().filter(|c| !c.passed).count();
    println!("acceptance: {} passed, {failed} failed", summary.criteria.len() - failed);
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
