//! Moment measure of the envelope at several times.
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
    let tab = p.moments()?;
    tab.write_csv(&mut std::io::stdout(), &p.hash).map_err(bergman_rays::Error::from)?;
    println!("# variation per column: {:?}", tab.variation);
    Ok(())
}
