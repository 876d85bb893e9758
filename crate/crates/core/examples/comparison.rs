//! Comparison harness on random quadratic pairs and the uniqueness probe.
use std::path::PathBuf;

use bergman_rays::cli::{Pipeline, RunConfig};

/// Loads the config named by the first argument, or the shipped default.
fn pipeline(default: &str) -> bergman_rays::Result<Pipeline> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| bergman_rays::acceptance::shipped_config_dir().join(format!("{default}.toml")));
    Pipeline::new(RunConfig::load(&path)?)
}

fn main() -> bergman_rays::Result<()> {
    let p = pipeline("cp1_linear")?;
    let run = p.compare()?;
    println!("comparison draws: {} passed, {} failed", run.harness.passed, run.harness.failed);
    println!("equality cases hold: {}", run.harness.equality_cases);
    let u = &run.uniqueness;
    println!(
        "uniqueness probe at level {}: delta = {}, mass = {:.3e}, distance to projection = {:.3e}",
        run.probed_level, u.delta, u.mass, u.distance
    );
    Ok(())
}
