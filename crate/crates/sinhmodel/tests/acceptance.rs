//! Acceptance suite: runs the twelve numbered criteria, prints one pass/fail
//! line per criterion (with the failing comparisons underneath) and exits
//! with a non-zero status when any criterion fails.

use sinhmodel::acceptance::run_all;

fn main() {
    println!("acceptance criteria");
    let outcomes = run_all(|o| {
        println!("{}", o.summary_line());
        for line in o.failure_lines().into_iter().chain(o.report_lines()) {
            println!("{line}");
        }
    });
    let failed: Vec<usize> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    println!(
        "acceptance: {} passed, {} failed{}",
        outcomes.len() - failed.len(),
        failed.len(),
        if failed.is_empty() { String::new() } else { format!(" ({failed:?})") }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
