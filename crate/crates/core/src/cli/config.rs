//! Run configuration, read from TOML.
//!
//! ```toml
//! name = "cp1_linear"
//! seed = 7
//!
//! [polytope]
//! vertices = [[0], [1]]
//!
//! [metric]
//! volume = 1.0
//!
//! [weights]
//! kind = "generator"          # "trivial" | "generator" | "table"
//! combinator = "max"
//! rounding = "ceil"
//! pieces = [{ slope = ["-1"], intercept = "1" }]
//! ```
//!
//! Every other section has defaults; see the shipped files under `configs/`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::toric::{Bump, Polytope, ToricMetric};
use crate::weights::{AffinePiece, Combinator, GeneratorSpec, Rounding, WeightSystem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Output directory; not part of the config hash.
    #[serde(default, skip_serializing)]
    pub output: Option<PathBuf>,
    pub polytope: PolytopeSpec,
    #[serde(default)]
    pub metric: MetricSpec,
    pub weights: WeightSpec,
    #[serde(default)]
    pub levels: LevelSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub compare: CompareSpec,
    /// Directory that relative paths in the file resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_seed() -> u64 {
    7
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolytopeSpec {
    pub vertices: Vec<Vec<i64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    #[serde(default = "default_metric_name")]
    pub name: String,
    #[serde(default = "one")]
    pub volume: f64,
    #[serde(default)]
    pub bump: Option<Bump>,
}

fn default_metric_name() -> String {
    "fubini-study".into()
}

fn one() -> f64 {
    1.0
}

impl Default for MetricSpec {
    fn default() -> Self {
        MetricSpec {
            name: default_metric_name(),
            volume: 1.0,
            bump: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightKind {
    Trivial,
    Generator,
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    pub kind: WeightKind,
    #[serde(default)]
    pub combinator: Combinator,
    #[serde(default)]
    pub rounding: Rounding,
    #[serde(default)]
    pub pieces: Vec<AffinePiece>,
    /// CSV `k,alpha,eta` table, for `kind = "table"`.
    #[serde(default)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelSpec {
    /// Levels of the ray; level 1 is always added.
    #[serde(default = "default_ray_levels")]
    pub ray: Vec<u32>,
    /// Levels entering the envelope are those `>= k_cut`.
    #[serde(default = "default_k_cut")]
    pub k_cut: u32,
    /// The triangular expansion runs over `2..=triangular_max`.
    #[serde(default = "default_triangular_max")]
    pub triangular_max: u32,
    #[serde(default = "default_mass_levels")]
    pub mass: Vec<u32>,
    /// Levels where the normalized trace is sampled for the expansion fit.
    #[serde(default = "default_futaki_levels")]
    pub futaki: Vec<u32>,
}

fn default_ray_levels() -> Vec<u32> {
    vec![1, 2, 4, 8, 16, 32]
}
fn default_k_cut() -> u32 {
    8
}
fn default_triangular_max() -> u32 {
    16
}
fn default_mass_levels() -> Vec<u32> {
    vec![4, 8, 16, 32]
}
fn default_futaki_levels() -> Vec<u32> {
    vec![1, 2, 3, 4, 5]
}

impl Default for LevelSpec {
    fn default() -> Self {
        LevelSpec {
            ray: default_ray_levels(),
            k_cut: default_k_cut(),
            triangular_max: default_triangular_max(),
            mass: default_mass_levels(),
            futaki: default_futaki_levels(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// The x-box is `[-half_width, half_width]^n`.
    #[serde(default = "default_half_width")]
    pub half_width: f64,
    /// `T`: the grid covers `t in [-T, 0]`.
    #[serde(default = "default_depth")]
    pub depth: f64,
    /// Cells per axis. The first drives the ray; regularity uses all.
    #[serde(default = "default_resolutions")]
    pub resolutions: Vec<usize>,
    /// `t`-window `[-mass_depth, 0]` of the mass decay.
    #[serde(default = "default_mass_depth")]
    pub mass_depth: f64,
    /// x-box of the moment measure; slice densities must have decayed there.
    #[serde(default = "default_moment_half_width")]
    pub moment_half_width: f64,
    #[serde(default = "default_moment_t")]
    pub moment_t: Vec<f64>,
    /// Cells per axis of the comparison and uniqueness grids.
    #[serde(default = "default_compare_cells")]
    pub compare_cells: usize,
}

fn default_half_width() -> f64 {
    8.0
}
fn default_depth() -> f64 {
    8.0
}
fn default_resolutions() -> Vec<usize> {
    vec![256, 128]
}
fn default_mass_depth() -> f64 {
    4.0
}
fn default_moment_half_width() -> f64 {
    16.0
}
fn default_moment_t() -> Vec<f64> {
    vec![-0.5, -1.0, -2.0]
}
fn default_compare_cells() -> usize {
    64
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            half_width: default_half_width(),
            depth: default_depth(),
            resolutions: default_resolutions(),
            mass_depth: default_mass_depth(),
            moment_half_width: default_moment_half_width(),
            moment_t: default_moment_t(),
            compare_cells: default_compare_cells(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "tol_quadrature")]
    pub quadrature: f64,
    /// Residual allowed in the identity between the two Bergman forms.
    #[serde(default = "tol_identity")]
    pub identity: f64,
    /// Coefficients above this count in the support condition.
    #[serde(default = "tol_support")]
    pub support: f64,
    /// `C_tol` of the comparison tolerance `C_tol h |boundary|`.
    #[serde(default = "tol_comparison")]
    pub comparison: f64,
    /// Allowed negative Hessian eigenvalue in the psh checks.
    #[serde(default = "tol_psh")]
    pub psh: f64,
    /// Allowed negative total mass.
    #[serde(default = "tol_mass")]
    pub mass: f64,
    /// Allowed negative slice density of the moment measure.
    #[serde(default = "tol_density")]
    pub density: f64,
    /// Total mass below which a potential counts as a solution of the
    /// degenerate equation in the uniqueness probe.
    #[serde(default = "tol_solution_mass")]
    pub solution_mass: f64,
}

fn tol_quadrature() -> f64 {
    1e-12
}
fn tol_identity() -> f64 {
    1e-12
}
fn tol_support() -> f64 {
    1e-8
}
fn tol_comparison() -> f64 {
    0.1
}
fn tol_psh() -> f64 {
    1e-6
}
fn tol_mass() -> f64 {
    1e-9
}
fn tol_density() -> f64 {
    1e-6
}
fn tol_solution_mass() -> f64 {
    1e-2
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            quadrature: tol_quadrature(),
            identity: tol_identity(),
            support: tol_support(),
            comparison: tol_comparison(),
            psh: tol_psh(),
            mass: tol_mass(),
            density: tol_density(),
            solution_mass: tol_solution_mass(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSpec {
    #[serde(default = "default_draws")]
    pub draws: u64,
    /// Height of the bump in the uniqueness probe.
    #[serde(default = "default_delta")]
    pub delta: f64,
}

fn default_draws() -> u64 {
    100
}
fn default_delta() -> f64 {
    0.1
}

impl Default for CompareSpec {
    fn default() -> Self {
        CompareSpec {
            draws: default_draws(),
            delta: default_delta(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.tolerances;
        let tols = [
            t.quadrature,
            t.identity,
            t.support,
            t.comparison,
            t.psh,
            t.mass,
            t.density,
            t.solution_mass,
        ];
        if tols.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::config("all tolerances must be positive"));
        }
        let l = &self.levels;
        for (name, list) in [("ray", &l.ray), ("mass", &l.mass), ("futaki", &l.futaki)] {
            if list.is_empty() || list.contains(&0) {
                return Err(Error::config(format!("levels.{name} must be a nonempty list of positive levels")));
            }
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::config(format!("levels.{name} must be strictly ascending")));
            }
        }
        let g = &self.grid;
        if g.resolutions.is_empty() || g.resolutions.iter().any(|r| *r < 4) {
            return Err(Error::config("grid.resolutions needs at least one entry of 4 or more cells"));
        }
        if !(g.half_width > 0.0 && g.depth > 0.0 && g.mass_depth > 0.0 && g.moment_half_width > 0.0) {
            return Err(Error::config("grid extents must be positive"));
        }
        if g.mass_depth > g.depth {
            return Err(Error::config("grid.mass_depth exceeds grid.depth"));
        }
        if self.metric.name != "fubini-study" {
            return Err(Error::config(format!("unknown metric '{}'", self.metric.name)));
        }
        match self.weights.kind {
            WeightKind::Generator if self.weights.pieces.is_empty() => {
                Err(Error::config("generator weights need at least one affine piece"))
            }
            WeightKind::Table if self.weights.table.is_none() => Err(Error::config("table weights need weights.table")),
            _ => Ok(()),
        }
    }

    /// SHA-256 of the canonical JSON form, first 16 hex digits.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&canonical);
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn polytope(&self) -> Result<Polytope> {
        let rows: Vec<&[i64]> = self.polytope.vertices.iter().map(Vec::as_slice).collect();
        Polytope::from_integer_vertices(&rows, self.name.clone())
    }

    pub fn metric(&self, polytope: &Polytope) -> Result<ToricMetric> {
        ToricMetric::with_perturbation(polytope, self.metric.volume, self.metric.bump.clone(), 0.0)
    }

    pub fn weight_system(&self, polytope: &Polytope) -> Result<WeightSystem> {
        let w = &self.weights;
        match w.kind {
            WeightKind::Trivial => Ok(WeightSystem::trivial(polytope)),
            WeightKind::Generator => WeightSystem::from_generator(
                polytope,
                &GeneratorSpec {
                    combinator: w.combinator,
                    pieces: w.pieces.clone(),
                    rounding: w.rounding,
                },
            ),
            WeightKind::Table => {
                let path = w.table.as_ref().expect("validated");
                WeightSystem::from_csv_path(polytope, &self.base_dir.join(path))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINEAR: &str = r#"
name = "cp1_linear"
[polytope]
vertices = [[0], [1]]
[weights]
kind = "generator"
pieces = [{ slope = ["-1"], intercept = "1" }]
"#;

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::parse(LINEAR, Path::new(".")).unwrap();
        assert_eq!(c.levels.k_cut, 8);
        assert_eq!(c.seed, 7);
        assert_eq!(c.weights.rounding, Rounding::Ceil);
        assert_eq!(c.hash().len(), 16);
        let ws = c.weight_system(&c.polytope().unwrap()).unwrap();
        assert_eq!(ws.weights(2).unwrap(), vec![2, 1, 0]);
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::parse(LINEAR, Path::new(".")).unwrap();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed = 8;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn rejects_bad_input() {
        let unsorted = format!("{LINEAR}[levels]\nray = [4, 2]\n");
        assert!(matches!(RunConfig::parse(&unsorted, Path::new(".")), Err(Error::Config(_))));
        let negative = format!("{LINEAR}[tolerances]\npsh = -1.0\n");
        assert!(RunConfig::parse(&negative, Path::new(".")).is_err());
        let unknown = format!("{LINEAR}bogus = 1\n");
        assert!(RunConfig::parse(&unknown, Path::new(".")).is_err());
        assert!(RunConfig::parse("name = 3", Path::new(".")).is_err());
    }
}
