//! The stack `{Phi_k}`, the `Psi_k`, the envelope, and their diagnostics.

use std::io::Write;

use serde::Serialize;

use super::analysis::{
    boundary_decay, envelope, log_log_slope, sup_t_derivative, t_derivative_check, uniform_bound_check, Envelope,
    TDerivativeReport, UniformBoundReport,
};
use super::grid::{Grid, GridFunction};
use super::level::{phi_k, phi_sharp_identity, psi_k, BergmanLevel};
use crate::error::{Error, Result};
use crate::toric::{build_basis, OrthonormalBasis, ToricMetric};
use crate::weights::{format_rational, mean_weight, WeightSystem};

#[derive(Debug, Clone, Serialize)]
pub struct LevelDiagnostics {
    pub k: u32,
    pub nk_plus_1: usize,
    /// `sup_{t=0} |Phi_k|`.
    pub a_k: f64,
    pub sup_abs_phi: f64,
    pub psi_min: f64,
    pub psi_max: f64,
    /// `Tr B_k / (k (N_k + 1))`, exact.
    pub trace_ratio: String,
    pub sharp_residual: f64,
    pub t_derivative: TDerivativeReport,
    /// `sup |d_t Psi_k|` on the same strip.
    pub sup_dt_psi: f64,
    pub gram_residual: f64,
    /// `Phi_k` at `t = -T`, largest magnitude; monitors depth dependence.
    pub sup_abs_at_depth: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RayDiagnostics {
    pub levels: Vec<LevelDiagnostics>,
    pub uniform_bound: UniformBoundReport,
    /// Slope of `log a_k` against `log k` over levels with `a_k > 0`.
    pub decay_slope: Option<f64>,
    pub sup_m: f64,
    pub volume: f64,
    pub k_cut: u32,
    pub envelope_levels: Vec<u32>,
    pub filter_effect: f64,
    /// `sup_k sup |Phi_k|` over the grid.
    pub interior_bound: f64,
}

#[derive(Debug, Clone)]
pub struct RayBundle {
    pub levels: Vec<u32>,
    pub bases: Vec<OrthonormalBasis>,
    pub bergman: Vec<BergmanLevel>,
    pub phi: Vec<GridFunction>,
    pub psi: Vec<GridFunction>,
    pub envelope: Envelope,
    pub diagnostics: RayDiagnostics,
}

/// Settings shared by every level of a bundle.
#[derive(Debug, Clone)]
pub struct RaySettings {
    pub k_cut: u32,
    /// Relative quadrature tolerance for the section norms.
    pub quad_tol: f64,
    pub identity_tol: f64,
    /// Width of the strip `[-strip, 0]` for the `t`-derivative check.
    pub strip: f64,
}

impl Default for RaySettings {
    fn default() -> Self {
        RaySettings {
            k_cut: 8,
            quad_tol: 1e-12,
            identity_tol: 1e-12,
            strip: 0.5,
        }
    }
}

impl RayBundle {
    /// Computes every level in `levels` (level 1 is added if absent, since
    /// `Psi_k` needs it) on `grid`.
    pub fn build(metric: &ToricMetric, ws: &WeightSystem, levels: &[u32], grid: &Grid, settings: &RaySettings) -> Result<Self> {
        let mut levels: Vec<u32> = levels.to_vec();
        if levels.iter().any(|k| *k == 0) {
            return Err(Error::config("levels must be positive"));
        }
        if !levels.contains(&1) {
            levels.push(1);
        }
        levels.sort_unstable();
        levels.dedup();
        let polytope = ws.polytope();

        let mut bases = Vec::with_capacity(levels.len());
        let mut bergman = Vec::with_capacity(levels.len());
        let mut phi = Vec::with_capacity(levels.len());
        for &k in &levels {
            let b = build_basis(polytope, k, metric, settings.quad_tol)?;
            phi.push(phi_k(&b, ws, metric, grid)?);
            bergman.push(BergmanLevel::new(&b, ws)?);
            bases.push(b);
            log::debug!("level {k} done");
        }
        let psi: Vec<GridFunction> = phi.iter().map(|f| psi_k(f, &phi[0])).collect::<Result<_>>()?;
        let env = envelope(&phi, settings.k_cut)?;

        let mut rows = Vec::with_capacity(levels.len());
        for (i, &k) in levels.iter().enumerate() {
            let eta = ws.weights_on(&bases[i].index)?;
            let ratio = mean_weight(&eta) / num::BigRational::from_integer(k.into());
            let depth_slice = phi[i].t_slice(0);
            rows.push(LevelDiagnostics {
                k,
                nk_plus_1: bases[i].len(),
                a_k: boundary_decay(&phi[i]),
                sup_abs_phi: phi[i].max_abs(),
                psi_min: psi[i].min(),
                psi_max: psi[i].max(),
                trace_ratio: format_rational(&ratio),
                sharp_residual: phi_sharp_identity(&phi[i], &bases[i], ws, metric, settings.identity_tol)?,
                t_derivative: t_derivative_check(&phi[i], &eta, k, settings.strip)?,
                sup_dt_psi: sup_t_derivative(&psi[i], settings.strip),
                gram_residual: bases[i].gram_residual,
                sup_abs_at_depth: depth_slice.iter().fold(0.0, |m, v| m.max(v.abs())),
            });
        }
        let pairs: Vec<(&GridFunction, usize)> = psi.iter().zip(&bases).map(|(p, b)| (p, b.len())).collect();
        let uniform_bound = uniform_bound_check(&pairs, &bases[0])?;

        let decay: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.a_k > 0.0 && r.k >= 2)
            .map(|r| (r.k as f64, r.a_k))
            .collect();
        let decay_slope = (decay.len() >= 2).then(|| {
            let (ks, aks): (Vec<f64>, Vec<f64>) = decay.into_iter().unzip();
            log_log_slope(&ks, &aks)
        });
        let interior_bound = phi.iter().map(GridFunction::max_abs).fold(0.0, f64::max);
        let diagnostics = RayDiagnostics {
            levels: rows,
            uniform_bound,
            decay_slope,
            sup_m: bases[0].sup_m,
            volume: bases[0].volume,
            k_cut: settings.k_cut,
            envelope_levels: env.levels.clone(),
            filter_effect: env.filter_effect,
            interior_bound,
        };
        Ok(RayBundle {
            levels,
            bases,
            bergman,
            phi,
            psi,
            envelope: env,
            diagnostics,
        })
    }

    pub fn level(&self, k: u32) -> Option<usize> {
        self.levels.iter().position(|l| *l == k)
    }

    /// Rows `x_1, ..., x_n, t, value, level` for every `Phi_k` and the
    /// envelope, after a `# config_hash` header line.
    pub fn write_csv<W: Write>(&self, mut w: W, config_hash: &str) -> Result<()> {
        writeln!(w, "# config_hash: {config_hash}")?;
        let n = self.envelope.sup.grid.dim();
        let mut header: Vec<String> = (1..=n).map(|d| format!("x{d}")).collect();
        header.extend(["t".into(), "value".into(), "level".into()]);
        writeln!(w, "{}", header.join(","))?;
        for f in self.phi.iter().chain(std::iter::once(&self.envelope.sup)) {
            write_rows(&mut w, f)?;
        }
        Ok(())
    }

    pub fn diagnostics_json(&self, config_hash: &str) -> serde_json::Value {
        serde_json::json!({
            "config_hash": config_hash,
            "diagnostics": self.diagnostics,
        })
    }
}

/// One CSV row per node, 17 significant digits.
pub fn write_rows<W: Write>(w: &mut W, f: &GridFunction) -> Result<()> {
    let tag = f.tag.to_string();
    for (i, v) in f.values.iter().enumerate() {
        let p = f.grid.point(i);
        let mut line = String::with_capacity(24 * (p.len() + 2));
        for c in &p {
            line.push_str(&format!("{c:.16e},"));
        }
        line.push_str(&format!("{v:.16e},{tag}"));
        writeln!(w, "{line}")?;
    }
    Ok(())
}
