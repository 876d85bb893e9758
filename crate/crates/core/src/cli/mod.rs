//! Command-line front end. `main.rs` only calls [`main_with_args`].
//!
//! Exit codes: 0 success, 1 configuration or I/O error, 2 numerical
//! failure, 3 invariant violation. Violations print their record as JSON
//! on stderr and into `violation.json` in the output directory.

pub mod config;
pub mod pipeline;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::RunConfig;
pub use pipeline::{BoundsReport, CompareRun, Pipeline, RegularityRun, TriangularRun, HOLDER_ALPHAS};

use crate::acceptance;
use crate::error::{Error, Result};
use crate::lower_triangular;

/// Environment variable for the default worker count.
pub const THREADS_ENV: &str = "BERGMAN_RAYS_THREADS";

#[derive(Debug, Parser)]
#[command(name = "bergman-rays", version, about = "Bergman approximations of toric geodesic rays")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; defaults to the config's `output`, then `out/<name>`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Largest level: caps the triangular run and every level list.
    #[arg(long, global = true)]
    pub k: Option<u32>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to $BERGMAN_RAYS_THREADS, then all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Cells per axis, replacing the configured resolutions.
    #[arg(long, global = true)]
    pub resolution: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Build the ray; writes ray.csv and diagnostics.json.
    Ray,
    /// Uniform lower bound on Psi_k and boundary decay; writes bounds.csv and bounds.json.
    Bounds,
    /// Expansion of powers of level-one sections; writes triangular.csv and triangular.json.
    Triangular,
    /// Monge–Ampère mass decay; writes mass.csv and mass.json.
    Mass,
    /// Comparison harness and uniqueness probe; writes compare.csv and compare.json.
    Compare,
    /// Hölder quotients of the envelope and psh checks; writes regularity.csv and regularity.json.
    Regularity,
    /// Moment measure of the envelope; writes moments.csv and moments.json.
    Moments,
    /// Exact leading coefficients of the normalized weight trace.
    Futaki,
    /// Every acceptance criterion over the shipped configurations.
    All,
}

impl Cli {
    /// The configuration with command-line overrides applied.
    pub fn load_config(&self) -> Result<RunConfig> {
        let path = self
            .config
            .as_ref()
            .ok_or_else(|| Error::config("--config is required for this subcommand"))?;
        let mut cfg = RunConfig::load(path)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(r) = self.resolution {
            cfg.grid.resolutions = vec![r];
        }
        if let Some(k) = self.k {
            cfg.levels.triangular_max = k;
            for list in [&mut cfg.levels.ray, &mut cfg.levels.mass] {
                list.retain(|l| *l <= k);
            }
        }
        if let Some(out) = &self.out {
            cfg.output = Some(out.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from("out").join(&cfg.name));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json(dir: &Path, name: &str, hash: &str, body: &impl serde::Serialize) -> Result<()> {
    let value = serde_json::json!({ "config_hash": hash, "report": body });
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, &value).map_err(|e| Error::Io(e.into()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn init_threads(requested: Option<usize>) {
    let threads = requested.or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.parse().ok()));
    if let Some(n) = threads.filter(|n| *n > 0) {
        // a pool set up earlier in the process (tests) is kept
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Runs one subcommand and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    init_threads(cli.threads);
    let result = match cli.command {
        Command::All => run_all(cli),
        cmd => cli.load_config().and_then(|cfg| dispatch(cmd, cfg)),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Invariant { record, .. } = &e {
                eprintln!("{}", serde_json::to_string_pretty(record).unwrap_or_default());
            }
            e.exit_code()
        }
    }
}

/// Parses `args` (program name first) and runs.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                1
            } else {
                0
            }
        }
    }
}

fn record_violation(dir: &Path, hash: &str, e: Error) -> Error {
    if let Error::Invariant { record, .. } = &e {
        if let Err(io) = write_json(dir, "violation.json", hash, record) {
            log::warn!("could not write violation.json: {io}");
        }
    }
    e
}

fn dispatch(cmd: Command, cfg: RunConfig) -> Result<()> {
    let dir = out_dir(&cfg)?;
    let p = Pipeline::new(cfg)?;
    let hash = p.hash.clone();
    command(cmd, &p, &dir).map_err(|e| record_violation(&dir, &hash, e))
}

fn command(cmd: Command, p: &Pipeline, dir: &Path) -> Result<()> {
    let hash = p.hash.as_str();
    match cmd {
        Command::Ray => {
            let bundle = p.ray(p.config.grid.resolutions[0])?;
            let mut w = create(dir, "ray.csv")?;
            bundle.write_csv(&mut w, hash)?;
            w.flush()?;
            let mut j = create(dir, "diagnostics.json")?;
            serde_json::to_writer_pretty(&mut j, &bundle.diagnostics_json(hash)).map_err(|e| Error::Io(e.into()))?;
            writeln!(j)?;
            j.flush()?;
            println!("ray: {} levels, envelope over {:?}", bundle.levels.len(), bundle.envelope.levels);
        }
        Command::Bounds => {
            let bundle = p.ray(p.config.grid.resolutions[0])?;
            let report = p.bounds(&bundle);
            let mut w = create(dir, "bounds.csv")?;
            writeln!(w, "# config_hash: {hash}")?;
            writeln!(w, "k,a_k,psi_min,psi_max,lower_bound,holds,sup_dt,dt_bound")?;
            for (d, u) in report.decay.iter().zip(&report.uniform_bound.rows) {
                writeln!(
                    w,
                    "{},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e},{:.16e}",
                    d.k, d.a_k, d.psi_min, d.psi_max, u.lower_bound, u.holds, d.sup_dt, d.dt_bound
                )?;
            }
            w.flush()?;
            write_json(dir, "bounds.json", hash, &report)?;
            let ub = &report.uniform_bound;
            println!("uniform bound: {} violations, sup |Psi_k| = {:.6e}", ub.violations, ub.sup_abs);
            if ub.violations > 0 {
                return Err(Error::invariant(
                    format!("uniform lower bound on Psi_k fails at {} level(s)", ub.violations),
                    serde_json::to_value(ub).unwrap_or_default(),
                ));
            }
            if let Some(d) = report.decay.iter().find(|d| !d.dt_holds) {
                return Err(Error::invariant(
                    format!("t-derivative bound fails at k = {}", d.k),
                    serde_json::to_value(d).unwrap_or_default(),
                ));
            }
        }
        Command::Triangular => {
            let run = p.triangular(p.config.levels.triangular_max)?;
            let b1 = p.basis(1)?;
            let mut w = create(dir, "triangular.csv")?;
            lower_triangular::write_csv(&mut w, &run.expansions, &p.weights, &b1, hash)?;
            w.flush()?;
            write_json(dir, "triangular.json", hash, &serde_json::json!({ "support": run.support, "bounds": run.bounds }))?;
            let bad = run.violations();
            println!("triangular: {} expansions, {} support violations", run.expansions.len(), bad.len());
            if !bad.is_empty() {
                return Err(Error::invariant(
                    format!("support condition fails for {} expansion(s)", bad.len()),
                    serde_json::to_value(&bad).unwrap_or_default(),
                ));
            }
            if let Some((e, b)) = run.expansions.iter().zip(&run.bounds).find(|(_, b)| !b.holds) {
                return Err(Error::invariant(
                    format!("coefficient bound fails at k = {}", e.k),
                    serde_json::json!({ "beta": e.beta, "k": e.k, "bound": b }),
                ));
            }
        }
        Command::Mass => {
            let decay = p.mass()?;
            let mut w = create(dir, "mass.csv")?;
            writeln!(w, "# config_hash: {hash}")?;
            writeln!(w, "k,mass,mass_fd,ratio")?;
            for r in &decay.rows {
                writeln!(w, "{},{:.16e},{:.16e},{:.16e}", r.k, r.mass, r.mass_fd, r.ratio)?;
            }
            w.flush()?;
            write_json(dir, "mass.json", hash, &decay)?;
            println!(
                "mass: C = {:.6e}, slope = {}, max ratio = {:.4}",
                decay.fitted_c,
                decay.slope.map_or("n/a".into(), |s| format!("{s:.4}")),
                decay.max_ratio
            );
            if !decay.bounded {
                return Err(Error::invariant(
                    "masses exceed the fitted C/k by more than 10%",
                    serde_json::to_value(&decay).unwrap_or_default(),
                ));
            }
        }
        Command::Compare => {
            let run = p.compare()?;
            let mut w = create(dir, "compare.csv")?;
            writeln!(w, "# config_hash: {hash}")?;
            writeln!(w, "draw,a,radius,eps,nodes,mass_v,mass_u,tolerance,holds")?;
            for d in &run.harness.draws {
                let r = &d.report;
                writeln!(
                    w,
                    "{},{:.16e},{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e},{}",
                    d.index, d.a, d.radius, d.eps, r.nodes, r.mass_v, r.mass_u, r.tolerance, r.holds
                )?;
            }
            w.flush()?;
            write_json(dir, "compare.json", hash, &run)?;
            println!(
                "compare: {}/{} draws pass, equality cases {}; uniqueness distance {:.3e} (h = {:.3e})",
                run.harness.passed,
                run.harness.draws.len(),
                if run.harness.equality_cases { "pass" } else { "fail" },
                run.uniqueness.distance,
                run.uniqueness.h
            );
            if !run.harness.equality_cases {
                return Err(Error::invariant("equality cases of the comparison check fail", serde_json::Value::Null));
            }
        }
        Command::Regularity => {
            let run = p.regularity()?;
            let mut w = create(dir, "regularity.csv")?;
            writeln!(w, "# config_hash: {hash}")?;
            writeln!(w, "resolution,h,alpha,s,q")?;
            for r in &run.holder.rows {
                writeln!(w, "{},{:.16e},{:.16e},{:.16e},{:.16e}", r.resolution, r.h, r.alpha, r.s, r.q)?;
            }
            w.flush()?;
            write_json(dir, "regularity.json", hash, &run)?;
            for v in &run.holder.verdicts {
                println!(
                    "alpha = {:.2}: {} (coarse {:.4e}, fine {:.4e})",
                    v.alpha,
                    if v.bounded { "bounded" } else { "diverging" },
                    v.coarse,
                    v.fine
                );
            }
        }
        Command::Moments => {
            let table = p.moments()?;
            let mut w = create(dir, "moments.csv")?;
            table.write_csv(&mut w, hash)?;
            w.flush()?;
            write_json(dir, "moments.json", hash, &table)?;
            for (c, name) in table.columns.iter().enumerate() {
                let col: Vec<String> = table.values.iter().map(|r| format!("{:.6}", r[c])).collect();
                println!("{name}: {} (variation {:.2e})", col.join(" "), table.variation[c]);
            }
        }
        Command::Futaki => {
            let f = p.futaki()?;
            write_json(dir, "futaki.json", hash, &f)?;
            println!(
                "F0={} F1={}",
                crate::weights::format_rational(&f.f0),
                crate::weights::format_rational(&f.f1)
            );
        }
        Command::All => unreachable!("handled by run_all"),
    }
    Ok(())
}

/// Runs the acceptance suite over the shipped configurations.
fn run_all(cli: &Cli) -> Result<()> {
    let results = acceptance::run_all(&acceptance::shipped_config_dir())?;
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("out").join("acceptance"));
    std::fs::create_dir_all(&dir)?;
    let mut w = create(&dir, "acceptance.txt")?;
    for r in &results {
        println!("{r}");
        writeln!(w, "{r}")?;
    }
    w.flush()?;
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(Error::invariant(
            format!("{failed} acceptance criteria fail"),
            serde_json::to_value(results.iter().filter(|r| !r.passed).map(|r| r.id).collect::<Vec<_>>())
                .unwrap_or_default(),
        ));
    }
    Ok(())
}
