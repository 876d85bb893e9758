//! Runs the ten acceptance criteria over the shipped configurations and
//! prints one line per criterion. Built without the libtest harness so the
//! lines are always shown; exits nonzero on an unexpected failure.

use bergman_rays::acceptance::{run_all, shipped_config_dir};

/// Criteria known to be out of reach at desk scale; they are reported but
/// do not fail the run.
const EXPECTED_FAILURES: [u32; 0] = [];

fn main() {
    let results = run_all(&shipped_config_dir()).expect("shipped configurations load");
    assert_eq!(results.len(), 10);
    for r in &results {
        println!("{r}");
    }
    let unexpected: Vec<u32> = results
        .iter()
        .filter(|r| !r.passed && !EXPECTED_FAILURES.contains(&r.id))
        .map(|r| r.id)
        .collect();
    if !unexpected.is_empty() {
        eprintln!("criteria failed: {unexpected:?}");
        std::process::exit(1);
    }
    println!("acceptance: {} of {} criteria passed", results.iter().filter(|r| r.passed).count(), results.len());
}
