//! One configured run: the objects every subcommand starts from, and the
//! reports each subcommand produces.

use serde::Serialize;

use super::config::RunConfig;
use crate::error::{Error, Result};
use crate::lower_triangular::{expand_power, verify_bound, verify_support, BoundReport, SupportReport, TriangularExpansion};
use crate::ma::{
    comparison_harness, mass_decay, uniqueness_probe, HarnessReport, HarnessSettings, MassDecay, ProbeSettings,
    UniquenessReport,
};
use crate::ray::{
    psh_check, sample_level, BergmanLevel, Grid, GridFunction, PshReport, RayBundle, RaySettings, Tag,
    UniformBoundReport,
};
use crate::regularity::{holder_estimate, moment_measure, MomentTable, RegularityReport, DEFAULT_BUMPS};
use crate::toric::{build_basis, OrthonormalBasis, Polytope, ToricMetric};
use crate::weights::{futaki, FutakiExpansion, WeightSystem};

/// Hölder exponents of the regularity report. Verdicts up to 0.99 are the
/// claim; exponent 1 is reported alongside.
pub const HOLDER_ALPHAS: [f64; 6] = [0.25, 0.5, 0.75, 0.9, 0.99, 1.0];

pub struct Pipeline {
    pub config: RunConfig,
    pub polytope: Polytope,
    pub metric: ToricMetric,
    pub weights: WeightSystem,
    pub hash: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayRow {
    pub k: u32,
    pub a_k: f64,
    pub psi_min: f64,
    pub psi_max: f64,
    pub sup_dt: f64,
    pub dt_bound: f64,
    pub dt_holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport {
    pub uniform_bound: UniformBoundReport,
    pub decay: Vec<DecayRow>,
    pub decay_slope: Option<f64>,
    pub interior_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TriangularRun {
    pub expansions: Vec<TriangularExpansion>,
    pub support: Vec<SupportReport>,
    pub bounds: Vec<BoundReport>,
}

impl TriangularRun {
    pub fn violations(&self) -> Vec<&SupportReport> {
        self.support.iter().filter(|s| !s.holds).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareRun {
    pub harness: HarnessReport,
    pub uniqueness: UniquenessReport,
    /// Level whose potential was probed.
    pub probed_level: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularityRun {
    pub holder: RegularityReport,
    /// One entry per level of the finest bundle.
    pub psh: Vec<PshReport>,
}

impl Pipeline {
    pub fn new(config: RunConfig) -> Result<Self> {
        let polytope = config.polytope()?;
        let metric = config.metric(&polytope)?;
        let weights = config.weight_system(&polytope)?;
        let hash = config.hash();
        Ok(Pipeline {
            config,
            polytope,
            metric,
            weights,
            hash,
        })
    }

    pub fn ray_settings(&self) -> RaySettings {
        RaySettings {
            k_cut: self.config.levels.k_cut,
            quad_tol: self.config.tolerances.quadrature,
            identity_tol: self.config.tolerances.identity,
            ..RaySettings::default()
        }
    }

    /// `[-half_width, half_width]^n x [-depth, 0]` with `cells` per axis.
    pub fn grid(&self, half_width: f64, depth: f64, cells: usize) -> Result<Grid> {
        Grid::cube(self.polytope.dim(), half_width, depth, cells)
    }

    pub fn ray_grid(&self, cells: usize) -> Result<Grid> {
        self.grid(self.config.grid.half_width, self.config.grid.depth, cells)
    }

    pub fn basis(&self, k: u32) -> Result<OrthonormalBasis> {
        build_basis(&self.polytope, k, &self.metric, self.config.tolerances.quadrature)
    }

    pub fn ray(&self, cells: usize) -> Result<RayBundle> {
        let grid = self.ray_grid(cells)?;
        RayBundle::build(&self.metric, &self.weights, &self.config.levels.ray, &grid, &self.ray_settings())
    }

    pub fn bounds(&self, bundle: &RayBundle) -> BoundsReport {
        let d = &bundle.diagnostics;
        BoundsReport {
            uniform_bound: d.uniform_bound.clone(),
            decay: d
                .levels
                .iter()
                .map(|l| DecayRow {
                    k: l.k,
                    a_k: l.a_k,
                    psi_min: l.psi_min,
                    psi_max: l.psi_max,
                    sup_dt: l.t_derivative.sup_dt,
                    dt_bound: l.t_derivative.bound,
                    dt_holds: l.t_derivative.holds,
                })
                .collect(),
            decay_slope: d.decay_slope,
            interior_bound: d.interior_bound,
        }
    }

    /// Expansions of every level-one section to the powers `2..=k_max`.
    /// Levels the weight system does not define (a table without them)
    /// are skipped.
    pub fn triangular(&self, k_max: u32) -> Result<TriangularRun> {
        let b1 = self.basis(1)?;
        let tol = self.config.tolerances.support;
        let mut run = TriangularRun {
            expansions: Vec::new(),
            support: Vec::new(),
            bounds: Vec::new(),
        };
        for k in 2..=k_max {
            if self.weights.weights(k).is_err() {
                log::info!("weights undefined at level {k}; skipped");
                continue;
            }
            let bk = self.basis(k)?;
            for beta in &b1.index.points {
                let e = expand_power(beta, &b1, &bk, &self.metric, self.config.tolerances.quadrature)?.with_support_tol(tol);
                run.support.push(verify_support(&e, &self.weights, &b1)?);
                run.bounds.push(verify_bound(&e));
                run.expansions.push(e);
            }
        }
        Ok(run)
    }

    fn mass_grid(&self) -> Result<Grid> {
        let g = &self.config.grid;
        self.grid(g.half_width, g.mass_depth, g.resolutions[0])
    }

    pub fn mass(&self) -> Result<MassDecay> {
        let levels: Vec<BergmanLevel> = self
            .config
            .levels
            .mass
            .iter()
            .map(|&k| BergmanLevel::new(&self.basis(k)?, &self.weights))
            .collect::<Result<_>>()?;
        mass_decay(&levels, &self.mass_grid()?, self.metric.calibration(), self.config.tolerances.mass)
    }

    fn background(&self, grid: &Grid) -> Result<GridFunction> {
        let n = grid.dim();
        GridFunction::sample(grid, Tag::Other("f0".into()), |y| self.metric.potential(&y[..n]))
    }

    pub fn compare(&self) -> Result<CompareRun> {
        let g = &self.config.grid;
        let grid = self.grid(g.half_width, g.mass_depth, g.compare_cells)?;
        let settings = HarnessSettings {
            draws: self.config.compare.draws,
            seed: self.config.seed,
            c_tol: self.config.tolerances.comparison,
            psh_tol: self.config.tolerances.psh,
        };
        let harness = comparison_harness(&self.background(&grid)?, self.metric.calibration(), &settings)?;

        // equal x and t half-widths align lattice diagonals with the kernel
        // direction of the linear-weight ray
        let probe_grid = self.grid(g.mass_depth, g.mass_depth, g.compare_cells)?;
        let top = *self.config.levels.ray.last().expect("validated nonempty");
        let level = BergmanLevel::new(&self.basis(top)?, &self.weights)?;
        let phi = sample_level(&level, &self.metric, &probe_grid, Tag::Level(top))?;
        let probe = ProbeSettings {
            mass_tol: self.config.tolerances.solution_mass,
            calibration: self.metric.calibration(),
            ..ProbeSettings::default()
        };
        let uniqueness = uniqueness_probe(&phi, &self.background(&probe_grid)?, self.config.compare.delta, &probe)?;
        Ok(CompareRun {
            harness,
            uniqueness,
            probed_level: top,
        })
    }

    /// Envelopes at every configured resolution, their Hölder report, and
    /// the psh check of each level on the finest grid.
    pub fn regularity(&self) -> Result<RegularityRun> {
        let mut res = self.config.grid.resolutions.clone();
        res.sort_unstable();
        res.dedup();
        if res.len() < 2 {
            return Err(Error::config("regularity needs two distinct grid resolutions"));
        }
        let mut envelopes = Vec::with_capacity(res.len());
        let mut finest = None;
        for &cells in &res {
            let bundle = self.ray(cells)?;
            envelopes.push(bundle.envelope.sup.clone());
            finest = Some(bundle);
        }
        let refs: Vec<&GridFunction> = envelopes.iter().collect();
        let holder = holder_estimate(&refs, &HOLDER_ALPHAS)?;
        let bundle = finest.expect("two resolutions");
        let grid = bundle.envelope.sup.grid.clone();
        let psh = bundle
            .bergman
            .iter()
            .map(|level| {
                let full = GridFunction::sample(&grid, Tag::Level(level.k()), |y| level.full(y))?;
                psh_check(level, &full, self.config.tolerances.psh)
            })
            .collect::<Result<_>>()?;
        Ok(RegularityRun { holder, psh })
    }

    /// Moments of the envelope on the moment grid.
    pub fn moments(&self) -> Result<MomentTable> {
        let g = &self.config.grid;
        let grid = self.grid(g.moment_half_width, g.mass_depth, g.resolutions[0])?;
        let bundle = RayBundle::build(&self.metric, &self.weights, &self.config.levels.ray, &grid, &self.ray_settings())?;
        let n = grid.dim();
        let env = &bundle.envelope.sup;
        let full = GridFunction::new(
            grid.clone(),
            env.values
                .iter()
                .enumerate()
                .map(|(i, v)| v + self.metric.potential(&grid.point(i)[..n]))
                .collect(),
            Tag::Envelope,
        )?;
        moment_measure(
            &full,
            self.metric.calibration(),
            &g.moment_t,
            &[1, 2, 3],
            &DEFAULT_BUMPS,
            self.config.tolerances.density,
        )
    }

    pub fn futaki(&self) -> Result<FutakiExpansion> {
        futaki(&self.weights, &self.polytope, &self.config.levels.futaki)
    }
}
