//! Bergman levels of the linear-weight ray on the projective line against
//! the closed form, and the uniform lower bound.
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
    let bundle = p.ray(64)?;
    let grid = &bundle.envelope.sup.grid;
    for (k, phi) in bundle.levels.iter().zip(&bundle.phi) {
        let err = (0..grid.len())
            .map(|i| {
                let y = grid.point(i);
                (phi.values[i] - bergman_rays::acceptance::closed_form_ray(y[0], y[1], *k as f64)).abs()
            })
            .fold(0.0, f64::max);
        println!("k = {k:>3}  max |Psi_k - closed form| = {err:.3e}");
    }
    let ub = &bundle.diagnostics.uniform_bound;
    println!("uniform lower bound violations: {}", ub.violations);
    Ok(())
}
