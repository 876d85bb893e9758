//! Hölder quotients of the gradient and their behavior under refinement.
//!
//! `Q(alpha, s) = max |grad F(p) - grad F(q)| / |p - q|^alpha` over node
//! pairs offset along one axis by about `s`. Separations run over dyadic
//! multiples of `2h`: shorter ones measure the stencil, not the function.

use rayon::prelude::*;
use serde::Serialize;

use super::gradient::gradient;
use crate::error::{Error, Result};
use crate::ray::GridFunction;

/// Allowed growth of the largest quotient from the coarse to the fine grid.
pub const REFINEMENT_SLACK: f64 = 1.2;

#[derive(Debug, Clone, Serialize)]
pub struct QuotientRow {
    pub resolution: usize,
    pub h: f64,
    pub alpha: f64,
    pub s: f64,
    pub q: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HolderVerdict {
    pub alpha: f64,
    pub coarse: f64,
    pub fine: f64,
    pub bounded: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularityReport {
    /// Largest spacing of each resolution, coarse to fine.
    pub h: Vec<f64>,
    pub rows: Vec<QuotientRow>,
    /// `max |f(p+e) - 2f(p) + f(p-e)| / h^2` over axes, per resolution.
    pub second_difference_max: Vec<f64>,
    pub verdicts: Vec<HolderVerdict>,
}

impl RegularityReport {
    pub fn all_bounded(&self) -> bool {
        self.verdicts.iter().all(|v| v.bounded)
    }

    pub fn max_quotient(&self, resolution: usize, alpha: f64) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.resolution == resolution && r.alpha == alpha)
            .map(|r| r.q)
            .fold(0.0, f64::max)
    }
}

fn max_h(f: &GridFunction) -> f64 {
    (0..=f.grid.dim()).map(|a| f.grid.spacing(a)).fold(0.0, f64::max)
}

fn second_difference_max(f: &GridFunction) -> f64 {
    let g = &f.grid;
    let strides = g.strides();
    (0..g.len())
        .into_par_iter()
        .filter(|&i| g.is_interior(&g.multi(i)))
        .map(|i| {
            (0..strides.len())
                .map(|a| {
                    let s = strides[a];
                    ((f.values[i + s] - 2.0 * f.values[i] + f.values[i - s]) / g.spacing(a).powi(2)).abs()
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

/// Quotients of one resolution for every `alpha` at dyadic separations.
fn quotients(f: &GridFunction, resolution: usize, alphas: &[f64]) -> Vec<QuotientRow> {
    let g = &f.grid;
    let grad = gradient(f);
    let shape = g.shape();
    let strides = g.strides();
    let h = max_h(f);
    let extent = (0..shape.len())
        .map(|a| g.spacing(a) * (shape[a] - 1) as f64)
        .fold(0.0, f64::max);
    let mut rows = Vec::new();
    let mut s = 2.0 * h;
    while s <= 0.5 * extent + 1e-12 {
        // per axis: the offset and its length; axes too short for it are skipped
        let offsets: Vec<(usize, usize, f64)> = (0..shape.len())
            .filter_map(|a| {
                let m = ((s / g.spacing(a)).round() as usize).max(2);
                (m < shape[a]).then(|| (a, m, m as f64 * g.spacing(a)))
            })
            .collect();
        let best: Vec<f64> = (0..g.len())
            .into_par_iter()
            .map(|i| {
                let p = g.multi(i);
                let mut best = vec![0.0; alphas.len()];
                for &(a, m, dist) in &offsets {
                    if p[a] + m >= shape[a] {
                        continue;
                    }
                    let j = i + m * strides[a];
                    let diff = grad
                        .components
                        .iter()
                        .map(|c| (c[i] - c[j]).powi(2))
                        .sum::<f64>()
                        .sqrt();
                    for (b, &alpha) in best.iter_mut().zip(alphas) {
                        *b = f64::max(*b, diff / dist.powf(alpha));
                    }
                }
                best
            })
            .reduce(
                || vec![0.0; alphas.len()],
                |a, b| a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect(),
            );
        for (&alpha, q) in alphas.iter().zip(best) {
            rows.push(QuotientRow {
                resolution,
                h,
                alpha,
                s,
                q,
            });
        }
        s *= 2.0;
    }
    rows
}

/// Hölder quotients of `phis` (any order, at least two resolutions); the
/// verdict compares the largest quotient on the finest grid against the
/// coarsest.
pub fn holder_estimate(phis: &[&GridFunction], alphas: &[f64]) -> Result<RegularityReport> {
    if phis.len() < 2 {
        return Err(Error::config("Hölder estimate needs at least two resolutions"));
    }
    let mut sorted: Vec<&GridFunction> = phis.to_vec();
    sorted.sort_by(|a, b| max_h(b).total_cmp(&max_h(a)));
    let mut rows = Vec::new();
    for (r, f) in sorted.iter().enumerate() {
        rows.extend(quotients(f, r, alphas));
    }
    let mut report = RegularityReport {
        h: sorted.iter().map(|f| max_h(f)).collect(),
        rows,
        second_difference_max: sorted.iter().map(|f| second_difference_max(f)).collect(),
        verdicts: Vec::new(),
    };
    let last = sorted.len() - 1;
    report.verdicts = alphas
        .iter()
        .map(|&alpha| {
            let coarse = report.max_quotient(0, alpha);
            let fine = report.max_quotient(last, alpha);
            HolderVerdict {
                alpha,
                coarse,
                fine,
                bounded: fine <= REFINEMENT_SLACK * coarse + 1e-12,
            }
        })
        .collect();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ray::{Grid, Tag};

    fn sampled(cells: usize, f: impl Fn(&[f64]) -> f64 + Sync) -> GridFunction {
        GridFunction::sample(&Grid::cube(1, 1.0, 2.0, cells).unwrap(), Tag::Other("f".into()), f).unwrap()
    }

    #[test]
    fn quadratic_is_bounded_below_one() {
        let (a, b) = (sampled(64, |y| 0.5 * y[0] * y[0]), sampled(128, |y| 0.5 * y[0] * y[0]));
        let r = holder_estimate(&[&b, &a], &[0.5, 0.9, 0.99]).unwrap();
        assert!(r.all_bounded(), "{:?}", r.verdicts);
        assert!(r.h[0] > r.h[1]);
        // Q(alpha, s) = s^{1 - alpha} along x
        let row = r.rows.iter().find(|q| q.resolution == 1 && q.alpha == 0.5).unwrap();
        assert!((row.q - row.s.powf(0.5)).abs() < 1e-9, "{row:?}");
    }

    #[test]
    fn three_halves_power() {
        let f = |y: &[f64]| y[0].abs().powf(1.5);
        let (a, b) = (sampled(64, f), sampled(128, f));
        let r = holder_estimate(&[&a, &b], &[0.5, 0.9]).unwrap();
        assert!(r.verdicts[0].bounded, "{:?}", r.verdicts);
        assert!(!r.verdicts[1].bounded, "{:?}", r.verdicts);
        // growth like s^{-0.4}: a factor near 2^{0.4} per halving
        let growth = r.verdicts[1].fine / r.verdicts[1].coarse;
        assert!(growth > 1.2 && growth < 1.45, "{growth}");
    }

    #[test]
    fn quotients_increase_with_alpha_at_small_separation() {
        let f = sampled(64, |y| (y[0] + y[1]).exp());
        let rows = quotients(&f, 0, &[0.2, 0.5, 0.9]);
        let first: Vec<f64> = rows.iter().take(3).map(|r| r.q).collect();
        assert!(rows[0].s < 1.0 && first[0] <= first[1] && first[1] <= first[2]);
    }

    #[test]
    fn closed_form_ray_is_bounded() {
        let ray = |y: &[f64]| ((2.0 * y[1]).exp() + y[0].exp()).ln() - y[0].exp().ln_1p();
        let mk = |n| GridFunction::sample(&Grid::cube(1, 8.0, 8.0, n).unwrap(), Tag::Other("ray".into()), ray).unwrap();
        let r = holder_estimate(&[&mk(64), &mk(128)], &[0.5, 0.9, 0.99, 1.0]).unwrap();
        assert!(r.all_bounded(), "{:?}", r.verdicts);
    }

    #[test]
    fn needs_two_resolutions() {
        let f = sampled(8, |y| y[0]);
        assert!(holder_estimate(&[&f], &[0.5]).is_err());
    }
}
