//! Total Monge–Ampère mass of `Omega_1 + i ddbar Psi_k` as `k` grows.
//!
//! With `Omega_1` given by the level-one Bergman potential, the full
//! potential `F_1 + Psi_k` equals `f0 + Phi_k`, a log-sum-exp field, so
//! the masses come from exact Hessians. Difference-Hessian masses of the
//! sampled potential are reported next to them.

use serde::Serialize;

use super::measure::{ma_measure, ma_measure_exact};
use crate::error::{Error, Result};
use crate::ray::{log_log_slope, BergmanLevel, Grid, GridFunction, Tag};

#[derive(Debug, Clone, Serialize)]
pub struct MassRow {
    pub k: u32,
    pub mass: f64,
    pub mass_fd: f64,
    /// `k * mass / C`; at most 1.1 when the `C/k` bound holds.
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MassDecay {
    pub rows: Vec<MassRow>,
    /// Slope of `log mass` against `log k`.
    pub slope: Option<f64>,
    /// Geometric mean of `k * mass_k`.
    pub fitted_c: f64,
    pub max_ratio: f64,
    /// Every mass is within 10% of `C / k`.
    pub bounded: bool,
}

/// Masses over the interior cells of `grid` (which fixes the `t`-window)
/// for each level.
pub fn mass_decay(levels: &[BergmanLevel], grid: &Grid, calibration: f64, negative_tol: f64) -> Result<MassDecay> {
    let mut rows = Vec::with_capacity(levels.len());
    for level in levels {
        let exact = ma_measure_exact(level.field(), grid, calibration)?;
        let sampled = GridFunction::sample(grid, Tag::Level(level.k()), |y| level.full(y))?;
        let fd = ma_measure(&sampled, calibration)?;
        if exact.total < -negative_tol {
            return Err(Error::invariant(
                format!("negative Monge–Ampère mass {:.3e} at k = {}", exact.total, level.k()),
                serde_json::json!({ "k": level.k(), "mass": exact.total }),
            ));
        }
        rows.push(MassRow {
            k: level.k(),
            mass: exact.total,
            mass_fd: fd.total,
            ratio: 0.0,
        });
    }
    // masses at roundoff level: the degenerate baseline, trivially bounded
    let degenerate = rows.iter().all(|r| r.mass.abs() <= negative_tol);
    if degenerate || rows.iter().any(|r| r.mass <= 0.0) {
        let max_mass = rows.iter().map(|r| r.mass).fold(0.0, f64::max);
        return Ok(MassDecay {
            rows,
            slope: None,
            fitted_c: 0.0,
            max_ratio: 0.0,
            bounded: degenerate || max_mass <= negative_tol,
        });
    }
    let fitted_c = (rows.iter().map(|r| (r.k as f64 * r.mass).ln()).sum::<f64>() / rows.len() as f64).exp();
    let mut max_ratio = 0.0f64;
    for r in rows.iter_mut() {
        r.ratio = r.k as f64 * r.mass / fitted_c;
        max_ratio = max_ratio.max(r.ratio);
    }
    let slope = (rows.len() >= 2).then(|| {
        let ks: Vec<f64> = rows.iter().map(|r| r.k as f64).collect();
        let ms: Vec<f64> = rows.iter().map(|r| r.mass).collect();
        log_log_slope(&ks, &ms)
    });
    Ok(MassDecay {
        rows,
        slope,
        fitted_c,
        max_ratio,
        bounded: max_ratio <= 1.1,
    })
}
