//! Hölder quotients of the envelope under grid refinement and psh checks.
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
    let run = p.regularity()?;
    for v in &run.holder.verdicts {
        println!("alpha = {:.2}  coarse = {:.4}  fine = {:.4}  bounded: {}", v.alpha, v.coarse, v.fine, v.bounded);
    }
    println!("psh on every level: {}", run.psh.iter().all(|r| r.holds));
    Ok(())
}
