//! Lower-triangular expansion of section powers with support and coefficient bounds.
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
    let p = pipeline("kinked")?;
    let run = p.triangular(6)?;
    for (e, b) in run.expansions.iter().zip(&run.bounds) {
        let support = run.support.iter().find(|s| s.k == e.k && s.beta == e.beta).map(|s| s.holds);
        println!(
            "beta = {:?} k = {}  terms = {:>2}  max|a| = {:.3e} <= {:.3e}  support holds: {:?}",
            e.beta,
            e.k,
            e.alphas.len(),
            b.max_abs,
            b.bound,
            support
        );
    }
    println!("support violations: {}", run.violations().len());
    Ok(())
}
