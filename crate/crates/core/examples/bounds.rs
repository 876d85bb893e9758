//! Uniform bound, t-derivative decay and interior bound of the kinked ray.
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
    let bundle = p.ray(64)?;
    let r = p.bounds(&bundle);
    for row in &r.decay {
        println!("k = {:>3}  a_k = {:.3e}  sup dPsi/dt = {:.3e} (bound {:.3e})", row.k, row.a_k, row.sup_dt, row.dt_bound);
    }
    println!("decay slope: {:?}", r.decay_slope);
    println!("uniform bound violations: {}", r.uniform_bound.violations);
    Ok(())
}
