//! Monge-Ampere mass of Bergman levels and the C/k decay fit.
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
    let d = p.mass()?;
    for r in &d.rows {
        println!("k = {:>3}  mass = {:.4e}  fd mass = {:.4e}  k*mass/C = {:.4}", r.k, r.mass, r.mass_fd, r.ratio);
    }
    println!("slope {:?}  C = {:.4e}  bounded: {}", d.slope, d.fitted_c, d.bounded);
    Ok(())
}
