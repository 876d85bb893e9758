//! L^2 norms of monomial sections and the orthonormal bases they give.
//!
//! For torus-invariant metrics the monomials `z^alpha` are L^2-orthogonal,
//! so an orthonormal basis is `s_alpha = z^alpha / r_alpha`. The Gram
//! matrix is still recomputed by quadrature on a sample of pairs, which is
//! what exposes a non-invariant metric.

use rayon::prelude::*;
use serde::Serialize;

use super::metric::ToricMetric;
use super::polytope::{lattice_points, LatticeIndex, Polytope};
use super::quadrature::{support_box, Adaptive};
use crate::error::{Error, Result};

/// Reach of the coarse scan that locates each integrand's support.
const SCAN_REACH: f64 = 64.0;
/// Integrands are truncated where they fall below `e^-36` (< 1e-14) of the peak.
const TAIL: f64 = 36.0;

#[derive(Debug, Clone, Serialize)]
pub struct OrthonormalBasis {
    pub index: LatticeIndex,
    /// `log r_alpha^2`, aligned with `index`.
    pub log_norm_sq: Vec<f64>,
    /// Largest off-diagonal Gram entry over the sampled pairs.
    pub gram_residual: f64,
    /// `M = sup_beta sup_X |s_beta^(1)|_{h0}`.
    pub sup_m: f64,
    /// `V`, total mass of the L^2 volume form.
    pub volume: f64,
}

impl OrthonormalBasis {
    pub fn k(&self) -> u32 {
        self.index.k
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// `r_alpha`.
    pub fn norm(&self, i: usize) -> f64 {
        (0.5 * self.log_norm_sq[i]).exp()
    }

    /// `log |s_alpha(x)|^2_{h0^k}`.
    pub fn log_pointwise_sq(&self, metric: &ToricMetric, i: usize, x: &[f64]) -> f64 {
        let alpha = &self.index.points[i];
        let ax: f64 = alpha.iter().zip(x).map(|(a, b)| *a as f64 * b).sum();
        ax - self.k() as f64 * metric.potential(x) - self.log_norm_sq[i]
    }
}

/// `(2 pi)^-n` times the trapezoidal integral over the torus of
/// `e^{i <m, theta>}` against the metric's angular factor at `x`.
fn angular_factor(metric: &ToricMetric, m: &[i64], k: u32, x: &[f64]) -> f64 {
    let top = m.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0) as usize;
    let nodes = 64.max(2 * top + 2);
    let step = std::f64::consts::TAU / nodes as f64;
    let c = k as f64 * metric.angular_profile(x);
    let mut out = 1.0;
    for (j, &mj) in m.iter().enumerate() {
        let mut s = 0.0;
        for l in 0..nodes {
            let th = step * l as f64;
            let w = if j == 0 && c != 0.0 { (-c * th.cos()).exp() } else { 1.0 };
            s += (mj as f64 * th).cos() * w;
        }
        out *= s / nodes as f64;
    }
    out
}

/// `log` of the x-part of the pairing integrand of `z^a` and `z^b` at level `k`:
/// `<a + b, x>/2 - k f0(x) + log rho(x)`.
fn log_integrand(metric: &ToricMetric, a: &[i64], b: &[i64], k: u32, x: &[f64]) -> f64 {
    let ab: f64 = a
        .iter()
        .zip(b)
        .zip(x)
        .map(|((p, q), xi)| (p + q) as f64 * xi * 0.5)
        .sum();
    let rho = metric.volume_density(x);
    if rho <= 0.0 {
        return f64::NEG_INFINITY;
    }
    ab - k as f64 * metric.potential(x) + rho.ln()
}

/// L^2 pairing `<z^a, z^b>` under `h0^k` and the calibrated volume, returned
/// as `(value, log_scale)` with the true pairing equal to
/// `value * exp(log_scale)`.
fn pairing(metric: &ToricMetric, a: &[i64], b: &[i64], k: u32, rel_tol: f64, abs_tol: f64) -> Result<(f64, f64)> {
    let n = metric.dim();
    let log_f = |x: &[f64]| log_integrand(metric, a, b, k, x);
    let (lo, hi, peak) = support_box(&log_f, n, SCAN_REACH, TAIL);
    let diff: Vec<i64> = a.iter().zip(b).map(|(p, q)| p - q).collect();
    let q = Adaptive::new(rel_tol, abs_tol);
    if metric.is_invariant() {
        let theta = angular_factor(metric, &diff, k, &vec![0.0; n]);
        let f = |x: &[f64]| (log_integrand(metric, a, b, k, x) - peak).exp();
        let est = q.integrate_box(&f, &lo, &hi)?;
        Ok((theta * est.value, peak))
    } else {
        let f = |x: &[f64]| (log_integrand(metric, a, b, k, x) - peak).exp() * angular_factor(metric, &diff, k, x);
        let est = q.integrate_box(&f, &lo, &hi)?;
        Ok((est.value, peak))
    }
}

/// `log r_alpha^2`, the log L^2 norm-squared of `z^alpha` under `h0^k`.
pub fn log_section_norm(alpha: &[i64], k: u32, metric: &ToricMetric, rel_tol: f64) -> Result<f64> {
    let (v, scale) = pairing(metric, alpha, alpha, k, rel_tol, 0.0)?;
    if !(v > 0.0) {
        return Err(Error::Numerical {
            message: format!("non-positive norm for alpha = {alpha:?} at level {k}"),
            achieved: v,
            required: rel_tol,
        });
    }
    Ok(v.ln() + scale)
}

/// `r_alpha^2 = ∫ e^{<alpha, x> - k f0(x)} dvol`.
pub fn section_norm(alpha: &[i64], k: u32, metric: &ToricMetric, rel_tol: f64) -> Result<f64> {
    Ok(log_section_norm(alpha, k, metric, rel_tol)?.exp())
}

/// Inner product `<z^a, z^b>` divided by `r_a r_b` (an entry of the Gram
/// matrix of the normalized monomials).
pub fn normalized_pairing(
    metric: &ToricMetric,
    a: &[i64],
    b: &[i64],
    k: u32,
    log_norm_a: f64,
    log_norm_b: f64,
    rel_tol: f64,
) -> Result<f64> {
    let diag_log = 0.5 * (log_norm_a + log_norm_b);
    // absolute tolerance measured against the geometric mean of the diagonal
    let probe = |x: &[f64]| log_integrand(metric, a, b, k, x);
    let (_, _, peak) = support_box(&probe, metric.dim(), SCAN_REACH, TAIL);
    let abs_tol = rel_tol * (diag_log - peak).exp();
    let (v, scale) = pairing(metric, a, b, k, rel_tol, abs_tol)?;
    Ok(v * (scale - diag_log).exp())
}

fn sampled_pairs(len: usize) -> Vec<(usize, usize)> {
    if len <= 6 {
        return (0..len)
            .flat_map(|i| (i + 1..len).map(move |j| (i, j)))
            .collect();
    }
    let mut pairs: Vec<(usize, usize)> = (0..len.min(9) - 1).map(|i| (i, i + 1)).collect();
    pairs.push((0, len - 1));
    pairs.push((0, len / 2));
    pairs.push((len / 3, 2 * len / 3));
    pairs
}

/// `M^2`: the largest value of `|s_beta^(1)|^2_{h0}` over `X`, found by
/// maximizing the concave `<beta, x> - f0(x)` over `[-40, 40]^n`. At
/// vertices of `P` the sup is only approached at infinity; `e^-40` is far
/// below double precision relative to it.
fn sup_sq(metric: &ToricMetric, level1: &LatticeIndex, log_norms: &[f64]) -> f64 {
    let n = metric.dim();
    let reach = 40.0;
    let mut best = f64::NEG_INFINITY;
    for (beta, ln) in level1.points.iter().zip(log_norms) {
        let g = |x: &[f64]| -> f64 {
            beta.iter().zip(x).map(|(b, xi)| *b as f64 * xi).sum::<f64>() - metric.potential(x) - ln
        };
        let (mut x, mut val) = coarse_max(&g, n, reach);
        let mut width = 2.0 * reach / 16.0;
        for _ in 0..60 {
            for d in 0..n {
                let lo = (x[d] - width).max(-reach);
                let hi = (x[d] + width).min(reach);
                let (xd, v) = golden_max(|t| {
                    let mut y = x.clone();
                    y[d] = t;
                    g(&y)
                }, lo, hi);
                if v > val {
                    x[d] = xd;
                    val = v;
                }
            }
            width *= 0.7;
        }
        best = best.max(val);
    }
    best.exp()
}

fn coarse_max(g: &dyn Fn(&[f64]) -> f64, n: usize, reach: f64) -> (Vec<f64>, f64) {
    let per_axis = 17usize;
    let step = 2.0 * reach / (per_axis - 1) as f64;
    let mut best = (vec![0.0; n], f64::NEG_INFINITY);
    let mut x = vec![0.0; n];
    for idx in 0..per_axis.pow(n as u32) {
        let mut r = idx;
        for xi in x.iter_mut() {
            *xi = -reach + step * (r % per_axis) as f64;
            r /= per_axis;
        }
        let v = g(&x);
        if v > best.1 {
            best = (x.clone(), v);
        }
    }
    best
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let ends = [(a, f(a)), (b, f(b)), (c, fc), (d, fd)];
    ends.into_iter().fold((a, f64::NEG_INFINITY), |acc, p| if p.1 > acc.1 { p } else { acc })
}

fn log_norms(index: &LatticeIndex, metric: &ToricMetric, rel_tol: f64) -> Result<Vec<f64>> {
    index
        .points
        .par_iter()
        .map(|alpha| log_section_norm(alpha, index.k, metric, rel_tol))
        .collect()
}

/// Basis at level `k` together with its Gram residual; does not reject
/// non-orthogonal data.
pub fn build_basis_unchecked(polytope: &Polytope, k: u32, metric: &ToricMetric, rel_tol: f64) -> Result<OrthonormalBasis> {
    let index = lattice_points(polytope, k)?;
    let log_norm_sq = log_norms(&index, metric, rel_tol)?;
    let level1 = lattice_points(polytope, 1)?;
    let level1_norms = if k == 1 {
        log_norm_sq.clone()
    } else {
        log_norms(&level1, metric, rel_tol)?
    };
    let sup_m = sup_sq(metric, &level1, &level1_norms).sqrt();

    let gram: Vec<f64> = sampled_pairs(index.len())
        .par_iter()
        .map(|&(i, j)| {
            normalized_pairing(
                metric,
                &index.points[i],
                &index.points[j],
                k,
                log_norm_sq[i],
                log_norm_sq[j],
                rel_tol,
            )
        })
        .collect::<Result<_>>()?;
    let gram_residual = gram.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    Ok(OrthonormalBasis {
        index,
        log_norm_sq,
        gram_residual,
        sup_m,
        volume: metric.volume(),
    })
}

/// Orthonormal basis `z^alpha / r_alpha` at level `k`. Fails when the Gram
/// residual exceeds `rel_tol`, i.e. when the monomials are not orthogonal.
pub fn build_basis(polytope: &Polytope, k: u32, metric: &ToricMetric, rel_tol: f64) -> Result<OrthonormalBasis> {
    let basis = build_basis_unchecked(polytope, k, metric, rel_tol)?;
    if basis.gram_residual > rel_tol {
        return Err(Error::invariant(
            format!(
                "Gram residual {:.3e} above tolerance {rel_tol:.1e}: metric is not torus-invariant",
                basis.gram_residual
            ),
            serde_json::json!({ "k": k, "gram_residual": basis.gram_residual }),
        ));
    }
    Ok(basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::{BigInt, BigRational, ToPrimitive};

    fn factorial(n: u64) -> BigInt {
        (1..=n).fold(BigInt::from(1), |acc, i| acc * BigInt::from(i))
    }

    /// `alpha!(k - alpha)!/(k + 1)!`, the Beta-integral value of `r_alpha^2` on CP^1.
    fn beta_oracle(alpha: u64, k: u64) -> f64 {
        BigRational::new(factorial(alpha) * factorial(k - alpha), factorial(k + 1))
            .to_f64()
            .unwrap()
    }

    fn cp1() -> (Polytope, ToricMetric) {
        let p = Polytope::unit_segment();
        let m = ToricMetric::fubini_study(&p, 1.0).unwrap();
        (p, m)
    }

    #[test]
    fn cp1_examples() {
        let (_, m) = cp1();
        assert!((section_norm(&[0], 1, &m, 1e-12).unwrap() - 0.5).abs() < 1e-12);
        assert!((section_norm(&[1], 2, &m, 1e-12).unwrap() - 1.0 / 6.0).abs() < 1e-12);
        assert!((section_norm(&[0], 2, &m, 1e-12).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn cp1_norms_match_beta_function() {
        let (_, m) = cp1();
        for k in [1u64, 3, 8, 17, 32] {
            for alpha in 0..=k {
                let got = section_norm(&[alpha as i64], k as u32, &m, 1e-12).unwrap();
                let want = beta_oracle(alpha, k);
                assert!((got / want - 1.0).abs() < 1e-10, "k={k} alpha={alpha}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn cp1_level_one_basis() {
        let (p, m) = cp1();
        let b = build_basis(&p, 1, &m, 1e-10).unwrap();
        for i in 0..2 {
            assert!((b.norm(i) - 0.5f64.sqrt()).abs() < 1e-12);
        }
        assert!((b.sup_m - 2f64.sqrt()).abs() < 1e-9, "M = {}", b.sup_m);
        assert_eq!(b.volume, 1.0);
        assert!(b.gram_residual < 1e-10);
        // Bergman sum is identically 2
        for x in [-5.0, 0.0, 0.7, 6.0] {
            let s: f64 = (0..2).map(|i| b.log_pointwise_sq(&m, i, &[x]).exp()).sum();
            assert!((s - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cp2_gram_is_diagonal_and_norms_match_dirichlet() {
        let p = Polytope::standard_simplex(2);
        let m = ToricMetric::fubini_study(&p, 1.0).unwrap();
        let b = build_basis(&p, 2, &m, 1e-10).unwrap();
        assert!(b.gram_residual < 1e-10);
        // Dirichlet integral: r^2 = 2 a! b! (k - a - b)! / (k + 2)!, with V = 1 = 2 * area
        for (i, a) in b.index.points.iter().enumerate() {
            let c = 2 - a[0] - a[1];
            let want = 2.0 * BigRational::new(
                factorial(a[0] as u64) * factorial(a[1] as u64) * factorial(c as u64),
                factorial(4),
            )
            .to_f64()
            .unwrap();
            assert!((b.log_norm_sq[i].exp() / want - 1.0).abs() < 1e-9, "{a:?}");
        }
    }

    #[test]
    fn non_invariant_metric_trips_gram_check() {
        let p = Polytope::unit_segment();
        let m = ToricMetric::with_perturbation(&p, 1.0, None, 0.5).unwrap();
        let b = build_basis_unchecked(&p, 2, &m, 1e-10).unwrap();
        assert!(b.gram_residual > 1e-4, "{}", b.gram_residual);
        assert!(matches!(build_basis(&p, 2, &m, 1e-10), Err(Error::Invariant { .. })));
    }

    #[test]
    fn deterministic() {
        let (p, m) = cp1();
        let a = build_basis(&p, 7, &m, 1e-10).unwrap();
        let b = build_basis(&p, 7, &m, 1e-10).unwrap();
        assert_eq!(a.index, b.index);
        assert_eq!(a.log_norm_sq, b.log_norm_sq);
    }
}
