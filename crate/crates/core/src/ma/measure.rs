//! Discrete Monge–Ampère measures of invariant functions.
//!
//! For `T^n x S^1`-invariant data `(Omega + i ddbar u)^{n+1}` is a constant
//! multiple of `det D^2_{(x,t)} F dx dt`, with `F` the convex potential in
//! log coordinates. The constant is the toric calibration of the metric,
//! so that `f0(x) + c t^2` carries mass `2 c V` per unit of `t`.
//!
//! Each interior node owns the cell of volume `prod h` around it.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lse::LseField;
use crate::ray::{Grid, GridFunction};
use crate::toric::quadrature::Adaptive;
use crate::toric::ToricMetric;

#[derive(Debug, Clone, Serialize)]
pub struct MaField {
    /// Mass per node; zero on the boundary.
    #[serde(skip)]
    pub masses: Vec<f64>,
    pub total: f64,
    /// Total negative mass removed by clamping.
    pub clamped: f64,
    /// Most negative determinant seen before clamping.
    pub min_det: f64,
    pub calibration: f64,
    pub cell_volume: f64,
}

fn cell_volume(grid: &Grid) -> f64 {
    (0..=grid.dim()).map(|a| grid.spacing(a)).product()
}

fn assemble(grid: &Grid, dets: Vec<f64>, calibration: f64) -> Result<MaField> {
    let vol = cell_volume(grid);
    let mut min_det = 0.0f64;
    let mut clamped = 0.0;
    let mut masses = Vec::with_capacity(dets.len());
    for (i, d) in dets.into_iter().enumerate() {
        if !d.is_finite() {
            return Err(Error::Numerical {
                message: format!("non-finite Hessian determinant at {:?}", grid.point(i)),
                achieved: d,
                required: 0.0,
            });
        }
        min_det = min_det.min(d);
        if d < 0.0 {
            clamped += -d * vol * calibration;
            masses.push(0.0);
        } else {
            masses.push(d * vol * calibration);
        }
    }
    Ok(MaField {
        total: masses.iter().sum(),
        masses,
        clamped,
        min_det,
        calibration,
        cell_volume: vol,
    })
}

/// Central-difference Monge–Ampère measure of the full potential `f`.
pub fn ma_measure(f: &GridFunction, calibration: f64) -> Result<MaField> {
    let g = &f.grid;
    let dets: Vec<f64> = (0..g.len())
        .into_par_iter()
        .map(|i| {
            let m = g.multi(i);
            if g.is_interior(&m) {
                f.fd_hessian(&m).determinant()
            } else {
                0.0
            }
        })
        .collect();
    assemble(g, dets, calibration)
}

/// Monge–Ampère measure of a log-sum-exp potential from its exact Hessian.
pub fn ma_measure_exact(field: &LseField, grid: &Grid, calibration: f64) -> Result<MaField> {
    let dets: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            if grid.is_interior(&grid.multi(i)) {
                field.hessian_det(&grid.point(i))
            } else {
                0.0
            }
        })
        .collect();
    assemble(grid, dets, calibration)
}

#[derive(Debug, Clone, Serialize)]
pub struct CalibrationCheck {
    pub discrete: f64,
    pub analytic: f64,
    pub relative_error: f64,
}

/// Discrete mass of `f0(x) + c t^2` against its exact value over the union
/// of interior cells.
pub fn reference_mass_check(metric: &ToricMetric, grid: &Grid, c: f64) -> Result<CalibrationCheck> {
    let f = GridFunction::sample(grid, crate::ray::Tag::Other("reference".into()), |y| {
        let n = y.len() - 1;
        metric.potential(&y[..n]) + c * y[n] * y[n]
    })?;
    let discrete = ma_measure(&f, metric.calibration())?.total;
    let n = grid.dim();
    let lo: Vec<f64> = (0..n).map(|d| grid.x_lo[d] + 0.5 * grid.hx(d)).collect();
    let hi: Vec<f64> = (0..n).map(|d| grid.x_hi[d] - 0.5 * grid.hx(d)).collect();
    let x_mass = Adaptive::new(1e-12, 0.0)
        .integrate_box(&|x: &[f64]| metric.determinant_hessian(x), &lo, &hi)?
        .value;
    let t_len = grid.depth - grid.ht();
    let analytic = metric.calibration() * x_mass * 2.0 * c * t_len;
    Ok(CalibrationCheck {
        discrete,
        analytic,
        relative_error: (discrete - analytic).abs() / analytic,
    })
}
