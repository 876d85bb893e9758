//! Perturb-and-project probe for uniqueness of the degenerate Dirichlet
//! problem.
//!
//! The full potential `F = background + phi` of a maximal solution is the
//! largest convex function with its boundary values. Raising `F` by an
//! interior bump and taking the convex envelope with the boundary held
//! fixed must therefore land back on `F`; a second solution with the same
//! boundary data would show up as a gap.
//!
//! The envelope is the fixed point of `u <- min(u, (u(p+d) + u(p-d)) / 2)`
//! over a set of lattice directions `d`, reached by monotone Gauss-Seidel
//! sweeps from above.

use serde::Serialize;

use super::measure::ma_measure;
use crate::error::Result;
use crate::ray::{Grid, GridFunction, Tag};

#[derive(Debug, Clone)]
pub struct ProbeSettings {
    /// Bump radius as a fraction of the smallest half-extent of the grid.
    pub radius_fraction: f64,
    /// Admissible total mass of the unperturbed potential.
    pub mass_tol: f64,
    pub calibration: f64,
    /// Sweeps stop once no node moves by more than this.
    pub change_tol: f64,
    pub max_sweeps: usize,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        ProbeSettings {
            radius_fraction: 0.5,
            mass_tol: 1e-2,
            calibration: 1.0,
            change_tol: 1e-13,
            max_sweeps: 200_000,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct UniquenessReport {
    pub delta: f64,
    /// Total difference-Hessian mass of the unperturbed potential.
    pub mass: f64,
    pub precondition_met: bool,
    /// `sup |project(F + bump) - F|`.
    pub distance: f64,
    /// Largest grid spacing.
    pub h: f64,
    pub sweeps: usize,
    pub converged: bool,
}

/// Primitive integer directions with entries in `[-reach, reach]` and
/// first nonzero entry positive.
pub fn lattice_directions(axes: usize, reach: i64) -> Vec<Vec<i64>> {
    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 {
            a.abs()
        } else {
            gcd(b, a % b)
        }
    }
    let side = (2 * reach + 1) as usize;
    let mut out = Vec::new();
    for code in 0..side.pow(axes as u32) {
        let mut c = code;
        let d: Vec<i64> = (0..axes)
            .map(|_| {
                let v = (c % side) as i64 - reach;
                c /= side;
                v
            })
            .collect();
        let Some(first) = d.iter().find(|v| **v != 0) else {
            continue;
        };
        if *first < 0 || d.iter().fold(0, |g, v| gcd(g, *v)) != 1 {
            continue;
        }
        out.push(d);
    }
    out
}

/// Directional convex envelope of `values` on `grid`, boundary nodes fixed.
/// Returns the number of sweeps and whether the change tolerance was met.
pub fn convex_projection(grid: &Grid, values: &mut [f64], dirs: &[Vec<i64>], change_tol: f64, max_sweeps: usize) -> (usize, bool) {
    let shape = grid.shape();
    let strides = grid.strides();
    let interior: Vec<usize> = (0..grid.len()).filter(|&i| grid.is_interior(&grid.multi(i))).collect();
    // per interior node, flat offsets of the directions whose stencil fits
    let stencils: Vec<Vec<usize>> = interior
        .iter()
        .map(|&i| {
            let m = grid.multi(i);
            dirs.iter()
                .filter(|d| {
                    d.iter().zip(&m).zip(&shape).all(|((&s, &p), &len)| {
                        let p = p as i64;
                        p - s.abs() >= 0 && p + s.abs() < len as i64
                    })
                })
                .map(|d| d.iter().zip(&strides).map(|(&s, &st)| s * st as i64).sum::<i64>().unsigned_abs() as usize)
                .collect()
        })
        .collect();
    for sweep in 1..=max_sweeps {
        let mut change = 0.0f64;
        let forward = sweep % 2 == 1;
        for r in 0..interior.len() {
            let r = if forward { r } else { interior.len() - 1 - r };
            let i = interior[r];
            let mut best = values[i];
            for &off in &stencils[r] {
                // offsets may point either way along the line; the pair is symmetric
                let (a, b) = (i + off, i - off);
                best = best.min(0.5 * (values[a] + values[b]));
            }
            // drops at roundoff level are not moves; keeps convex data fixed exactly
            let drop = values[i] - best;
            if drop > 1e-15 * (1.0 + values[i].abs()) {
                change = change.max(drop);
                values[i] = best;
            }
        }
        if change < change_tol {
            return (sweep, true);
        }
    }
    (max_sweeps, false)
}

/// Raises `background + phi` by `delta (1 - |y - c|^2 / R^2)_+` about the
/// grid center, projects, and reports the sup-distance to the original.
pub fn uniqueness_probe(phi: &GridFunction, background: &GridFunction, delta: f64, settings: &ProbeSettings) -> Result<UniquenessReport> {
    bump_probe(phi, background, delta, settings, None)
}

/// As [`uniqueness_probe`] with an explicit bump center and radius.
pub fn bump_probe(
    phi: &GridFunction,
    background: &GridFunction,
    delta: f64,
    settings: &ProbeSettings,
    bump: Option<(Vec<f64>, f64)>,
) -> Result<UniquenessReport> {
    phi.same_grid(background)?;
    let g = &phi.grid;
    let axes = g.dim() + 1;
    let full: Vec<f64> = phi.values.iter().zip(&background.values).map(|(a, b)| a + b).collect();
    let full_gf = GridFunction::new(g.clone(), full.clone(), Tag::Other("probe".into()))?;
    let mass = ma_measure(&full_gf, settings.calibration)?.total;

    let lo: Vec<f64> = (0..axes).map(|a| if a < g.dim() { g.x_lo[a] } else { -g.depth }).collect();
    let hi: Vec<f64> = (0..axes).map(|a| if a < g.dim() { g.x_hi[a] } else { 0.0 }).collect();
    let (center, radius) = bump.unwrap_or_else(|| {
        let half = (0..axes).map(|a| 0.5 * (hi[a] - lo[a])).fold(f64::INFINITY, f64::min);
        ((0..axes).map(|a| 0.5 * (lo[a] + hi[a])).collect(), settings.radius_fraction * half)
    });
    let mut values = full.clone();
    for (i, v) in values.iter_mut().enumerate() {
        if !g.is_interior(&g.multi(i)) {
            continue;
        }
        let y = g.point(i);
        let r2: f64 = y.iter().zip(&center).map(|(p, q)| (p - q) * (p - q)).sum();
        *v += delta * (1.0 - r2 / (radius * radius)).max(0.0);
    }
    let reach = if axes <= 2 { 3 } else { 1 };
    let dirs = lattice_directions(axes, reach);
    let (sweeps, converged) = convex_projection(g, &mut values, &dirs, settings.change_tol, settings.max_sweeps);
    let distance = values.iter().zip(&full).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let h = (0..axes).map(|a| g.spacing(a)).fold(0.0, f64::max);
    Ok(UniquenessReport {
        delta,
        mass,
        precondition_met: mass.abs() <= settings.mass_tol,
        distance,
        h,
        sweeps,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closed_form(g: &Grid) -> (GridFunction, GridFunction) {
        let f0 = GridFunction::sample(g, Tag::Other("f0".into()), |y| y[0].exp().ln_1p()).unwrap();
        let phi = GridFunction::sample(g, Tag::Other("phi".into()), |y| {
            ((2.0 * y[1]).exp() + y[0].exp()).ln() - y[0].exp().ln_1p()
        })
        .unwrap();
        (phi, f0)
    }

    #[test]
    fn directions_are_primitive() {
        let d = lattice_directions(2, 3);
        assert!(d.contains(&vec![1, 0]) && d.contains(&vec![0, 1]) && d.contains(&vec![2, -1]));
        assert!(!d.contains(&vec![2, 2]) && !d.contains(&vec![-1, 0]));
        assert_eq!(d.len(), 16);
    }

    #[test]
    fn zero_perturbation_is_fixed() {
        let g = Grid::cube(1, 4.0, 4.0, 64).unwrap();
        let (phi, f0) = closed_form(&g);
        let r = uniqueness_probe(&phi, &f0, 0.0, &ProbeSettings::default()).unwrap();
        assert!(r.precondition_met && r.converged);
        assert_eq!(r.distance, 0.0);
    }

    #[test]
    fn bump_on_closed_form_ray_is_removed() {
        let g = Grid::cube(1, 4.0, 4.0, 64).unwrap();
        let (phi, f0) = closed_form(&g);
        let r = uniqueness_probe(&phi, &f0, 0.1, &ProbeSettings::default()).unwrap();
        assert!(r.converged && r.distance <= 2.0 * r.h, "{r:?}");
    }

    #[test]
    fn non_convex_spike_is_removed() {
        let g = Grid::cube(1, 4.0, 4.0, 64).unwrap();
        let (phi, f0) = closed_form(&g);
        let h = g.spacing(0);
        let spike = Some((vec![0.5, -2.0], 3.0 * h));
        let r = bump_probe(&phi, &f0, 0.5, &ProbeSettings::default(), spike).unwrap();
        assert!(r.converged && r.distance <= r.h, "{r:?}");
    }

    #[test]
    fn projection_keeps_convex_data() {
        let g = Grid::cube(1, 1.0, 2.0, 16).unwrap();
        let f = GridFunction::sample(&g, Tag::Other("q".into()), |y| y[0] * y[0] + 0.3 * y[0] * y[1] + y[1] * y[1]).unwrap();
        let mut v = f.values.clone();
        convex_projection(&g, &mut v, &lattice_directions(2, 3), 1e-14, 10);
        assert_eq!(v, f.values);
    }
}
