//! The ten acceptance criteria, run over the shipped configurations.
//!
//! Each criterion yields one [`CriterionResult`]; errors raised while
//! computing a criterion count as a failure of that criterion only.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::cli::{Pipeline, RunConfig, HOLDER_ALPHAS};
use crate::error::Result;
use crate::ray::{psh_check, GridFunction, RayBundle, Tag};
use crate::regularity::holder_estimate;
use crate::weights::format_rational;

/// Directory of the configurations shipped with the crate.
pub fn shipped_config_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs")
}

pub const SHIPPED: [&str; 3] = ["trivial", "cp1_linear", "kinked"];

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:>2} {}: {} ({:.1} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds
        )
    }
}

/// `log((e^{2t} + e^x)/(1 + e^x)) + (1/k) log(1 + 1/k)`.
pub fn closed_form_ray(x: f64, t: f64, k: f64) -> f64 {
    let top = x.max(2.0 * t);
    (top + ((2.0 * t - top).exp() + (x - top).exp()).ln()) - x.exp().ln_1p() + (1.0 / k).ln_1p() / k
}

/// `(1/k) log(1 + 1/k)`.
pub fn closed_form_decay(k: f64) -> f64 {
    (1.0 / k).ln_1p() / k
}

struct Shipped {
    name: &'static str,
    pipeline: Pipeline,
    /// Ray bundles per configured resolution, finest first; build time in seconds.
    bundles: Vec<(usize, std::result::Result<RayBundle, String>, f64)>,
}

impl Shipped {
    fn load(dir: &Path, name: &'static str) -> Result<Self> {
        let cfg = RunConfig::load(&dir.join(format!("{name}.toml")))?;
        let pipeline = Pipeline::new(cfg)?;
        let mut res = pipeline.config.grid.resolutions.clone();
        res.sort_unstable_by(|a, b| b.cmp(a));
        res.dedup();
        let bundles = res
            .into_iter()
            .map(|cells| {
                let start = Instant::now();
                let b = pipeline.ray(cells).map_err(|e| e.to_string());
                (cells, b, start.elapsed().as_secs_f64())
            })
            .collect();
        Ok(Shipped {
            name,
            pipeline,
            bundles,
        })
    }

    fn finest(&self) -> std::result::Result<&RayBundle, String> {
        self.bundles[0].1.as_ref().map_err(|e| format!("{}: {e}", self.name))
    }
}

type Outcome = std::result::Result<(bool, String), String>;

fn finish(id: u32, name: &'static str, start: Instant, outcome: Outcome) -> CriterionResult {
    let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionResult {
        id,
        name,
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn find<'a>(suite: &'a [Shipped], name: &str) -> std::result::Result<&'a Shipped, String> {
    suite
        .iter()
        .find(|s| s.name == name)
        .ok_or_else(|| format!("configuration {name} not loaded"))
}

fn c1_closed_form(suite: &[Shipped]) -> Outcome {
    let s = find(suite, "cp1_linear")?;
    let b = s.finest()?;
    let build = s.bundles[0].2;
    let grid = &b.envelope.sup.grid;
    let mut worst = 0.0f64;
    for k in [1u32, 2, 4, 8, 16, 32] {
        let i = b.level(k).ok_or_else(|| format!("level {k} missing from the ray"))?;
        for (n, v) in b.phi[i].values.iter().enumerate() {
            let y = grid.point(n);
            worst = worst.max((v - closed_form_ray(y[0], y[1], k as f64)).abs());
        }
    }
    let kc = b.envelope.k_cut as f64;
    let env = b
        .envelope
        .sup
        .values
        .iter()
        .enumerate()
        .map(|(n, v)| {
            let y = grid.point(n);
            (v - closed_form_ray(y[0], y[1], kc)).abs()
        })
        .fold(0.0, f64::max);
    let cells = grid.x_cells[0];
    Ok((
        worst <= 1e-9 && env <= 1e-9 && build < 60.0 && cells >= 256,
        format!("max |Phi_k - closed form| = {worst:.2e}, envelope {env:.2e}, {cells}^2 cells, build {build:.1} s"),
    ))
}

fn c2_decay(suite: &[Shipped]) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["trivial", "cp1_linear"] {
        let b = find(suite, name)?.finest()?;
        let mut worst = 0.0f64;
        let (mut ks, mut aks) = (Vec::new(), Vec::new());
        for l in &b.diagnostics.levels {
            worst = worst.max((l.a_k - closed_form_decay(l.k as f64)).abs());
            if (4..=32).contains(&l.k) {
                ks.push(l.k as f64);
                aks.push(l.a_k);
            }
        }
        let slope = crate::ray::log_log_slope(&ks, &aks);
        ok &= worst <= 1e-9 && (-2.2..=-1.8).contains(&slope) && ks.len() >= 2;
        parts.push(format!("{name}: a_k error {worst:.2e}, slope {slope:.3}"));
    }
    Ok((ok, parts.join("; ")))
}

fn c3_uniform(suite: &[Shipped]) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for s in suite {
        let b = s.finest()?;
        let depth = b.envelope.sup.grid.depth;
        let rows: Vec<_> = b.diagnostics.uniform_bound.rows.iter().filter(|r| r.k <= 32).collect();
        let bad = rows.iter().filter(|r| !r.holds).count();
        let sup = b.diagnostics.uniform_bound.sup_abs;
        ok &= bad == 0 && sup.is_finite() && depth >= 8.0;
        parts.push(format!("{}: {bad} violations over {} levels, sup |Psi_k| = {sup:.3e}", s.name, rows.len()));
    }
    Ok((ok, parts.join("; ")))
}

fn c4_triangular(suite: &[Shipped]) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for s in suite {
        let run = s.pipeline.triangular(16).map_err(|e| e.to_string())?;
        let support = run.violations().len();
        let bound = run.bounds.iter().filter(|b| !b.holds).count();
        ok &= support == 0 && bound == 0;
        let mut detail = format!("{}: {support} support / {bound} bound violations", s.name);
        if s.name == "cp1_linear" {
            let mut worst = 0.0f64;
            for e in &run.expansions {
                let kb: Vec<i64> = e.beta.iter().map(|b| b * e.k as i64).collect();
                let i = e.alphas.iter().position(|a| *a == kb).ok_or("k beta missing")?;
                let expect = 2f64.powf(e.k as f64 / 2.0) / ((e.k + 1) as f64).sqrt();
                worst = worst.max((e.coefficients[i] - expect).abs());
            }
            ok &= worst <= 1e-8;
            detail.push_str(&format!(", closed-form error {worst:.2e}"));
        }
        parts.push(detail);
    }
    Ok((ok, parts.join("; ")))
}

fn c5_identity(suite: &[Shipped]) -> Outcome {
    let mut worst = 0.0f64;
    let mut levels = 0;
    for s in suite {
        for (_, b, _) in &s.bundles {
            let b = b.as_ref().map_err(|e| format!("{}: {e}", s.name))?;
            for l in &b.diagnostics.levels {
                worst = worst.max(l.sharp_residual);
                levels += 1;
            }
        }
    }
    Ok((worst <= 1e-12, format!("max residual {worst:.2e} over {levels} levels")))
}

fn c6_mass(suite: &[Shipped]) -> Outcome {
    let kinked = find(suite, "kinked")?;
    let d = kinked.pipeline.mass().map_err(|e| e.to_string())?;
    let ks: Vec<u32> = d.rows.iter().map(|r| r.k).collect();
    let covers = [4, 8, 16, 32].iter().all(|k| ks.contains(k));
    let linear = find(suite, "cp1_linear")?.pipeline.mass().map_err(|e| e.to_string())?;
    let ray_mass = linear.rows.iter().map(|r| r.mass.abs()).fold(0.0, f64::max);
    Ok((
        covers && d.bounded && d.slope.is_some() && ray_mass <= 1e-6,
        format!(
            "kinked: C = {:.4e}, max k m_k / C = {:.4}, slope {}; closed-form ray mass {ray_mass:.2e}",
            d.fitted_c,
            d.max_ratio,
            d.slope.map_or("n/a".into(), |s| format!("{s:.3}"))
        ),
    ))
}

fn c7_comparison(suite: &[Shipped]) -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for s in suite {
        let run = s.pipeline.compare().map_err(|e| format!("{}: {e}", s.name))?;
        let h = &run.harness;
        ok &= h.failed == 0 && h.equality_cases && h.draws.len() >= 100;
        parts.push(format!("{}: {}/{} pass", s.name, h.passed, h.draws.len()));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 120.0;
    Ok((ok, format!("{}, equality cases exact, {secs:.1} s", parts.join("; "))))
}

fn c8_moments(suite: &[Shipped]) -> Outcome {
    let s = find(suite, "cp1_linear")?;
    let tab = s.pipeline.moments().map_err(|e| e.to_string())?;
    let volume = s.pipeline.metric.volume();
    let mut worst: f64 = 0.0;
    for (name, exact) in [("m1", 1.0), ("m2", 4.0 / 3.0)] {
        for v in tab.column(name).ok_or("moment column missing")? {
            worst = worst.max((v - exact).abs());
        }
    }
    let mass_err = tab
        .column("mass")
        .ok_or("mass column missing")?
        .iter()
        .map(|m| (m - volume).abs() / volume)
        .fold(0.0, f64::max);
    let variation = tab.variation.iter().copied().fold(0.0, f64::max);
    let samples_ok = [-0.5, -1.0, -2.0].iter().all(|t| tab.t_samples.iter().any(|s| (s - t).abs() < 1e-12));
    Ok((
        worst <= 1e-3 && variation <= 1e-3 && mass_err <= 5e-3 && samples_ok,
        format!("moment error {worst:.2e}, cross-t variation {variation:.2e}, mass error {mass_err:.2e}"),
    ))
}

fn c9_futaki(suite: &[Shipped]) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, f0, f1) in [("cp1_linear", "1/2", "0"), ("trivial", "0", "0")] {
        let f = find(suite, name)?.pipeline.futaki().map_err(|e| e.to_string())?;
        let (a, b) = (format_rational(&f.f0), format_rational(&f.f1));
        ok &= a == f0 && b == f1 && f.residual == 0.0;
        parts.push(format!("{name}: F0={a} F1={b} residual {}", f.residual));
    }
    Ok((ok, parts.join("; ")))
}

fn c10_regularity(suite: &[Shipped]) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for s in suite {
        let envs: Vec<&GridFunction> = s
            .bundles
            .iter()
            .map(|(_, b, _)| b.as_ref().map(|b| &b.envelope.sup))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| format!("{}: {e}", s.name))?;
        let cells: Vec<usize> = s.bundles.iter().map(|(c, _, _)| *c).collect();
        if !(cells.contains(&128) && cells.contains(&256)) {
            return Err(format!("{}: needs resolutions 128 and 256, has {cells:?}", s.name));
        }
        let report = holder_estimate(&envs, &HOLDER_ALPHAS).map_err(|e| e.to_string())?;
        let diverging: Vec<f64> = report
            .verdicts
            .iter()
            .filter(|v| v.alpha <= 0.99 && !v.bounded)
            .map(|v| v.alpha)
            .collect();
        let mut min_eig = f64::INFINITY;
        let mut psh_ok = true;
        for (_, b, _) in &s.bundles {
            let b = b.as_ref().map_err(|e| e.to_string())?;
            let grid = &b.envelope.sup.grid;
            for level in &b.bergman {
                let full = GridFunction::sample(grid, Tag::Level(level.k()), |y| level.full(y)).map_err(|e| e.to_string())?;
                match psh_check(level, &full, s.pipeline.config.tolerances.psh) {
                    Ok(r) => min_eig = min_eig.min(r.min_eigenvalue_exact),
                    Err(_) => psh_ok = false,
                }
            }
        }
        ok &= diverging.is_empty() && psh_ok;
        parts.push(format!(
            "{}: diverging alphas {diverging:?}, min eigenvalue {min_eig:.2e}",
            s.name
        ));
    }
    Ok((ok, parts.join("; ")))
}

/// Runs all ten criteria over the configurations in `dir`.
pub fn run_all(dir: &Path) -> Result<Vec<CriterionResult>> {
    let start = Instant::now();
    let suite: Vec<Shipped> = SHIPPED.iter().map(|n| Shipped::load(dir, n)).collect::<Result<_>>()?;
    log::info!("shipped rays built in {:.1} s", start.elapsed().as_secs_f64());
    let criteria: [(u32, &'static str, fn(&[Shipped]) -> Outcome); 10] = [
        (1, "closed-form ray reproduction", c1_closed_form),
        (2, "boundary decay", c2_decay),
        (3, "uniform lower bound", c3_uniform),
        (4, "lower-triangular expansion", c4_triangular),
        (5, "Bergman form identity", c5_identity),
        (6, "Monge-Ampère mass decay", c6_mass),
        (7, "comparison principle", c7_comparison),
        (8, "moment measure", c8_moments),
        (9, "Donaldson-Futaki coefficients", c9_futaki),
        (10, "regularity and psh", c10_regularity),
    ];
    Ok(criteria
        .iter()
        .map(|(id, name, f)| {
            let t = Instant::now();
            finish(*id, name, t, f(&suite))
        })
        .collect())
}
