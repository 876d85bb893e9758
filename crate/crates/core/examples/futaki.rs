//! Futaki invariant from the weight trace polynomial.
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
    let f = p.futaki()?;
    println!("F0 = {}  F1 = {}  residual = {:.3e}", f.f0, f.f1, f.residual);
    Ok(())
}
