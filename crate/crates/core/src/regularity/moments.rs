//! Moment measure of a ray: `mu_t(f) = int_X f(dphi/dt) omega_{phi_t}^n`,
//! the pushforward of the slice volume under the time derivative.
//!
//! On the grid, `omega_{phi_t}^n` is the calibrated determinant of the
//! x-Hessian of the full potential `F = f0 + phi` at fixed `t`, and
//! `dphi/dt = dF/dt` by central differences. Along a geodesic every entry
//! is independent of `t`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ray::GridFunction;

/// Compactly supported `exp(-1 / (1 - ((s - center)/width)^2))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpTest {
    pub center: f64,
    pub width: f64,
}

impl BumpTest {
    pub fn eval(&self, s: f64) -> f64 {
        let u = (s - self.center) / self.width;
        if u.abs() >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - u * u)).exp()
        }
    }
}

pub const DEFAULT_BUMPS: [BumpTest; 2] = [
    BumpTest {
        center: 0.5,
        width: 0.5,
    },
    BumpTest {
        center: 1.5,
        width: 0.5,
    },
];

#[derive(Debug, Clone, Serialize)]
pub struct MomentTable {
    pub t_samples: Vec<f64>,
    pub orders: Vec<u32>,
    pub bumps: Vec<BumpTest>,
    /// Entry names in column order: `mass`, `m1`, ..., `bump0`, ...
    pub columns: Vec<String>,
    /// `values[j][c]` for sample `j` and column `c`.
    pub values: Vec<Vec<f64>>,
    /// Per column, `(max - min) / |mean|` across samples (0 if all vanish).
    pub variation: Vec<f64>,
    pub min_density: f64,
}

impl MomentTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.columns.iter().position(|n| n == name)?;
        Some(self.values.iter().map(|row| row[c]).collect())
    }

    pub fn write_csv(&self, w: &mut impl std::io::Write, hash: &str) -> std::io::Result<()> {
        writeln!(w, "# config_hash: {hash}")?;
        writeln!(w, "t,{}", self.columns.join(","))?;
        for (t, row) in self.t_samples.iter().zip(&self.values) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(w, "{t:.16e},{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// Moments of the slice measures of the full potential `full = f0 + phi`
/// at the grid times nearest `t_samples` (which must be interior).
/// `calibration` is the toric calibration, so `mu_t(1)` approximates the
/// volume. Boundary x-nodes carry no mass.
pub fn moment_measure(
    full: &GridFunction,
    calibration: f64,
    t_samples: &[f64],
    orders: &[u32],
    bumps: &[BumpTest],
    density_tol: f64,
) -> Result<MomentTable> {
    let g = &full.grid;
    let n = g.dim();
    let strides = g.strides();
    let shape = g.shape();
    let x_cell: f64 = (0..n).map(|a| g.hx(a)).product();
    let mut columns = vec!["mass".to_string()];
    columns.extend(orders.iter().map(|m| format!("m{m}")));
    columns.extend((0..bumps.len()).map(|b| format!("bump{b}")));

    let mut values = Vec::with_capacity(t_samples.len());
    let mut snapped = Vec::with_capacity(t_samples.len());
    let mut min_density = f64::INFINITY;
    for &t in t_samples {
        let j = g.t_index(t);
        if j == 0 || j + 1 >= g.t_nodes() || (g.t_at(j) - t).abs() > 0.5 * g.ht() + 1e-12 {
            return Err(Error::config(format!("moment sample t = {t} is not an interior grid time")));
        }
        snapped.push(g.t_at(j));
        let mut row = vec![0.0; columns.len()];
        for ix in 0..g.x_nodes() {
            let xm = g.x_multi(ix);
            if xm.iter().zip(&shape).any(|(&p, &len)| p == 0 || p + 1 == len) {
                continue;
            }
            let mut multi = xm.clone();
            multi.push(j);
            let i = g.flat(&multi);
            let mut hess = DMatrix::zeros(n, n);
            for a in 0..n {
                for b in a..n {
                    let (sa, sb) = (strides[a], strides[b]);
                    let v = &full.values;
                    hess[(a, b)] = if a == b {
                        (v[i + sa] - 2.0 * v[i] + v[i - sa]) / g.hx(a).powi(2)
                    } else {
                        (v[i + sa + sb] - v[i + sa - sb] - v[i - sa + sb] + v[i - sa - sb]) / (4.0 * g.hx(a) * g.hx(b))
                    };
                    hess[(b, a)] = hess[(a, b)];
                }
            }
            let density = calibration * hess.determinant();
            min_density = min_density.min(density);
            if density < -density_tol {
                return Err(Error::invariant(
                    format!("negative slice density {density:.3e}"),
                    serde_json::json!({ "x": g.x_at(ix), "t": g.t_at(j), "density": density }),
                ));
            }
            let st = strides[n];
            let dot = (full.values[i + st] - full.values[i - st]) / (2.0 * g.ht());
            let w = density * x_cell;
            row[0] += w;
            for (c, &m) in orders.iter().enumerate() {
                row[1 + c] += w * dot.powi(m as i32);
            }
            for (c, b) in bumps.iter().enumerate() {
                row[1 + orders.len() + c] += w * b.eval(dot);
            }
        }
        values.push(row);
    }
    let variation = (0..columns.len())
        .map(|c| {
            let col: Vec<f64> = values.iter().map(|r| r[c]).collect();
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let mean = col.iter().sum::<f64>() / col.len().max(1) as f64;
            if hi == lo {
                0.0
            } else {
                (hi - lo) / mean.abs()
            }
        })
        .collect();
    Ok(MomentTable {
        t_samples: snapped,
        orders: orders.to_vec(),
        bumps: bumps.to_vec(),
        columns,
        values,
        variation,
        min_density,
    })
}
