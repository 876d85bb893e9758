//! Envelope of the Bergman potentials and the checks run on them.

use serde::Serialize;

use super::grid::{GridFunction, Tag};
use super::level::BergmanLevel;
use crate::error::{Error, Result};
use crate::toric::OrthonormalBasis;

#[derive(Debug, Clone, Serialize)]
pub struct Envelope {
    /// Nodewise `sup_{l >= k_cut} Phi_l`. A finite sup of continuous
    /// functions is already upper semicontinuous, so this is the value used.
    pub sup: GridFunction,
    /// `sup` after a max-filter over each node's axis neighbours.
    pub usc_filtered: GridFunction,
    /// `max |usc_filtered - sup|`; shrinks with the grid spacing.
    pub filter_effect: f64,
    pub levels: Vec<u32>,
    pub k_cut: u32,
}

fn level_of(f: &GridFunction) -> Option<u32> {
    match f.tag {
        Tag::Level(k) => Some(k),
        _ => None,
    }
}

/// Envelope over the levels `>= k_cut` among `phis`. Needs at least three.
pub fn envelope(phis: &[GridFunction], k_cut: u32) -> Result<Envelope> {
    let used: Vec<&GridFunction> = phis
        .iter()
        .filter(|f| level_of(f).is_some_and(|k| k >= k_cut))
        .collect();
    if used.len() < 3 {
        return Err(Error::config(format!(
            "envelope needs at least 3 levels >= k_cut = {k_cut}, got {}",
            used.len()
        )));
    }
    for f in &used[1..] {
        used[0].same_grid(f)?;
    }
    let mut sup = used[0].values.clone();
    for f in &used[1..] {
        for (s, v) in sup.iter_mut().zip(&f.values) {
            *s = s.max(*v);
        }
    }
    let grid = used[0].grid.clone();
    let filtered = max_filter(&grid, &sup);
    let filter_effect = sup
        .iter()
        .zip(&filtered)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let mut levels: Vec<u32> = used.iter().filter_map(|f| level_of(f)).collect();
    levels.sort_unstable();
    Ok(Envelope {
        sup: GridFunction::new(grid.clone(), sup, Tag::Envelope)?,
        usc_filtered: GridFunction::new(grid, filtered, Tag::Other("envelope_usc".into()))?,
        filter_effect,
        levels,
        k_cut,
    })
}

fn max_filter(grid: &super::grid::Grid, v: &[f64]) -> Vec<f64> {
    let shape = grid.shape();
    let st = grid.strides();
    (0..v.len())
        .map(|i| {
            let m = grid.multi(i);
            let mut best = v[i];
            for a in 0..shape.len() {
                if m[a] > 0 {
                    best = best.max(v[i - st[a]]);
                }
                if m[a] + 1 < shape[a] {
                    best = best.max(v[i + st[a]]);
                }
            }
            best
        })
        .collect()
}

/// Tail suprema `sup_{l >= k} Phi_l` for each level `k` present, in
/// ascending `k`. Nodewise nonincreasing in `k` by construction.
pub fn tail_sups(phis: &[GridFunction]) -> Result<Vec<(u32, GridFunction)>> {
    let mut sorted: Vec<&GridFunction> = phis.iter().filter(|f| level_of(f).is_some()).collect();
    sorted.sort_by_key(|f| level_of(f));
    let mut out: Vec<(u32, GridFunction)> = Vec::new();
    for f in sorted.iter().rev() {
        let k = level_of(f).expect("filtered");
        let vals = match out.last() {
            Some((_, prev)) => {
                prev.same_grid(f)?;
                prev.values.iter().zip(&f.values).map(|(a, b)| a.max(*b)).collect()
            }
            None => f.values.clone(),
        };
        out.push((k, GridFunction::new(f.grid.clone(), vals, Tag::Other(format!("tail{k}")))?));
    }
    out.reverse();
    Ok(out)
}

/// `a_k = sup_{t = 0} |Phi_k|`.
pub fn boundary_decay(phi: &GridFunction) -> f64 {
    phi.t_slice(phi.grid.t_cells).iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Lower bound on `Psi_k` from the uniform-bound argument:
/// `-(1/k) log(V (N_k + 1)) - 2 log M - (n/k) log k - log(N_1 + 1)`.
pub fn uniform_lower_bound(k: u32, n: usize, volume: f64, sup_m: f64, nk_plus_1: usize, n1_plus_1: usize) -> f64 {
    let kf = k as f64;
    -(volume * nk_plus_1 as f64).ln() / kf - 2.0 * sup_m.ln() - n as f64 / kf * kf.ln() - (n1_plus_1 as f64).ln()
}

#[derive(Debug, Clone, Serialize)]
pub struct UniformBoundRow {
    pub k: u32,
    pub nk_plus_1: usize,
    pub min_psi: f64,
    pub max_psi: f64,
    pub lower_bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct UniformBoundReport {
    pub rows: Vec<UniformBoundRow>,
    /// `sup_k sup |Psi_k|` over the checked levels.
    pub sup_abs: f64,
    pub violations: usize,
}

/// Checks `min Psi_k >= uniform_lower_bound` for each `(psi_k, N_k + 1)`.
pub fn uniform_bound_check(psis: &[(&GridFunction, usize)], basis1: &OrthonormalBasis) -> Result<UniformBoundReport> {
    let n = basis1.index.points.first().map_or(0, Vec::len);
    let mut rows = Vec::with_capacity(psis.len());
    let mut sup_abs = 0.0f64;
    for (psi, nk1) in psis {
        let k = match psi.tag {
            Tag::Psi(k) | Tag::Level(k) => k,
            _ => return Err(Error::config("uniform bound check expects Psi_k grid functions")),
        };
        let lower_bound = uniform_lower_bound(k, n, basis1.volume, basis1.sup_m, *nk1, basis1.len());
        let (min_psi, max_psi) = (psi.min(), psi.max());
        sup_abs = sup_abs.max(psi.max_abs());
        rows.push(UniformBoundRow {
            k,
            nk_plus_1: *nk1,
            min_psi,
            max_psi,
            lower_bound,
            holds: min_psi >= lower_bound,
        });
    }
    let violations = rows.iter().filter(|r| !r.holds).count();
    let report = UniformBoundReport {
        rows,
        sup_abs,
        violations,
    };
    if violations > 0 {
        return Err(Error::invariant(
            format!("{violations} level(s) violate the uniform lower bound on Psi_k"),
            serde_json::to_value(&report).unwrap_or_default(),
        ));
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct TDerivativeReport {
    pub k: u32,
    /// Largest `|d_t Phi_k|` by differences on the strip.
    pub sup_dt: f64,
    /// `(2/k) max |eta|`.
    pub bound: f64,
    /// Allowed excess, one `t`-spacing.
    pub tolerance: f64,
    pub holds: bool,
}

/// Largest `|d_t f|` on `t in [-strip, 0]`: central differences at interior
/// `t` nodes, a backward difference at `t = 0`.
pub fn sup_t_derivative(f: &GridFunction, strip: f64) -> f64 {
    let g = &f.grid;
    let nt = g.t_nodes();
    let ht = g.ht();
    let j0 = g.t_index(-strip);
    let mut worst = 0.0f64;
    for ix in 0..g.x_nodes() {
        let row = &f.values[ix * nt..(ix + 1) * nt];
        for j in j0..nt {
            let d = if j + 1 < nt && j > 0 {
                (row[j + 1] - row[j - 1]) / (2.0 * ht)
            } else if j > 0 {
                (row[j] - row[j - 1]) / ht
            } else {
                (row[j + 1] - row[j]) / ht
            };
            worst = worst.max(d.abs());
        }
    }
    worst
}

/// `|d_t Phi_k| <= (2/k) max_alpha |eta_alpha| + h_t` near `t = 0`.
pub fn t_derivative_check(phi: &GridFunction, eta: &[i64], k: u32, strip: f64) -> Result<TDerivativeReport> {
    let bound = 2.0 / k as f64 * eta.iter().map(|e| e.unsigned_abs()).max().unwrap_or(0) as f64;
    let tolerance = phi.grid.ht();
    let sup_dt = sup_t_derivative(phi, strip);
    let report = TDerivativeReport {
        k,
        sup_dt,
        bound,
        tolerance,
        holds: sup_dt <= bound + tolerance,
    };
    if !report.holds {
        return Err(Error::invariant(
            format!("|d_t Phi_k| = {sup_dt:.6} exceeds {bound:.6} + h_t at k = {k}"),
            serde_json::to_value(&report).unwrap_or_default(),
        ));
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct PshReport {
    pub k: u32,
    /// Smallest eigenvalue of the exact Hessian of `f0 + Phi_k` over the
    /// interior nodes.
    pub min_eigenvalue_exact: f64,
    /// Same for the central-difference Hessian of the sampled values.
    pub min_eigenvalue_fd: f64,
    pub tolerance: f64,
    pub holds: bool,
}

/// Convexity of `f0 + Phi_k` in `(x, t)` at every interior node. The exact
/// log-sum-exp Hessian decides; the difference Hessian of `full` (the
/// sampled `f0 + Phi_k`) is reported alongside.
pub fn psh_check(level: &BergmanLevel, full: &GridFunction, tolerance: f64) -> Result<PshReport> {
    use rayon::prelude::*;
    let g = &full.grid;
    let (exact, fd) = (0..g.len())
        .into_par_iter()
        .filter_map(|i| {
            let m = g.multi(i);
            if !g.is_interior(&m) {
                return None;
            }
            let y = g.point(i);
            let e = level.field().hessian_min_eigenvalue(&y);
            let d = nalgebra::SymmetricEigen::new(full.fd_hessian(&m)).eigenvalues.min();
            Some((e, d))
        })
        .reduce(|| (f64::INFINITY, f64::INFINITY), |a, b| (a.0.min(b.0), a.1.min(b.1)));
    let report = PshReport {
        k: level.k(),
        min_eigenvalue_exact: exact,
        min_eigenvalue_fd: fd,
        tolerance,
        holds: exact >= -tolerance,
    };
    if !report.holds {
        return Err(Error::invariant(
            format!("f0 + Phi_k is not convex at k = {}: eigenvalue {exact:.3e}", level.k()),
            serde_json::to_value(&report).unwrap_or_default(),
        ));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ray::grid::Grid;

    fn shifted(grid: &Grid, k: u32, c: f64) -> GridFunction {
        GridFunction::sample(grid, Tag::Level(k), |y| (y[0] * y[1]).sin() + c).unwrap()
    }

    #[test]
    fn envelope_of_monotone_shifts() {
        let g = Grid::cube(1, 2.0, 2.0, 8).unwrap();
        let phis: Vec<GridFunction> = [1u32, 2, 4, 8, 16]
            .iter()
            .map(|&k| shifted(&g, k, 1.0 / k as f64))
            .collect();
        let env = envelope(&phis, 2).unwrap();
        assert_eq!(env.levels, vec![2, 4, 8, 16]);
        let expect = shifted(&g, 2, 0.5);
        assert!(env.sup.max_diff(&expect).unwrap() == 0.0);
        assert!(env.filter_effect > 0.0);
        assert!(envelope(&phis, 8).is_err());
        let tails = tail_sups(&phis).unwrap();
        for w in tails.windows(2) {
            assert!(w[0].1.values.iter().zip(&w[1].1.values).all(|(a, b)| a >= b));
        }
    }

    #[test]
    fn filter_effect_shrinks_with_spacing() {
        let effect = |cells| {
            let g = Grid::cube(1, 2.0, 2.0, cells).unwrap();
            let phis: Vec<GridFunction> = [4u32, 8, 16]
                .iter()
                .map(|&k| GridFunction::sample(&g, Tag::Level(k), |y| -(y[0] - 0.3).abs() - y[1] * y[1] / k as f64).unwrap())
                .collect();
            envelope(&phis, 4).unwrap().filter_effect
        };
        assert!(effect(64) < 0.6 * effect(32));
    }

    #[test]
    fn decay_and_slope() {
        let ks = [4.0, 8.0, 16.0, 32.0];
        let a: Vec<f64> = ks.iter().map(|k: &f64| (1.0 + 1.0 / k).ln() / k).collect();
        let s = log_log_slope(&ks, &a);
        assert!((-2.2..=-1.8).contains(&s), "{s}");
        assert!((log_log_slope(&[1.0, 2.0, 4.0], &[3.0, 1.5, 0.75]) + 1.0).abs() < 1e-14);
    }

    #[test]
    fn lower_bound_closed_form() {
        let b = uniform_lower_bound(8, 1, 1.0, 2f64.sqrt(), 9, 2);
        let expect = -(9f64).ln() / 8.0 - 2f64.ln() - 8f64.ln() / 8.0 - 2f64.ln();
        assert!((b - expect).abs() < 1e-15);
        assert!((b + 1.9208).abs() < 1e-3);
    }

    #[test]
    fn t_derivative_of_linear_in_t() {
        let g = Grid::cube(1, 1.0, 1.0, 16).unwrap();
        let f = GridFunction::sample(&g, Tag::Level(4), |y| 1.5 * y[1]).unwrap();
        assert!((sup_t_derivative(&f, 0.5) - 1.5).abs() < 1e-12);
        let r = t_derivative_check(&f, &[3, 1, 0], 4, 0.5).unwrap();
        assert!(r.holds && r.bound == 1.5);
        assert!(t_derivative_check(&f, &[2, 1, 0], 4, 0.5).is_err());
    }
}
