//! Torus-invariant metrics on a toric line bundle, written through their
//! Kähler potential `f0` in log coordinates `x_i = log |z_i|^2`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::polytope::{lattice_points, Polytope};
use super::quadrature::{support_box, Adaptive};
use crate::error::{Error, Result};

/// Gaussian bump `amplitude * exp(-|x - center|^2 / (2 width^2))` added to
/// the potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub amplitude: f64,
    pub center: Vec<f64>,
    pub width: f64,
}

impl Bump {
    fn profile(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum();
        (-r2 / (2.0 * self.width * self.width)).exp()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.amplitude * self.profile(x)
    }

    fn add_gradient(&self, x: &[f64], g: &mut [f64]) {
        let p = self.amplitude * self.profile(x);
        let w2 = self.width * self.width;
        for i in 0..x.len() {
            g[i] -= p * (x[i] - self.center[i]) / w2;
        }
    }

    fn add_hessian(&self, x: &[f64], h: &mut DMatrix<f64>) {
        let p = self.amplitude * self.profile(x);
        let w2 = self.width * self.width;
        let n = x.len();
        for i in 0..n {
            for j in 0..n {
                let di = (x[i] - self.center[i]) / w2;
                let dj = (x[j] - self.center[j]) / w2;
                let delta = if i == j { 1.0 / w2 } else { 0.0 };
                h[(i, j)] += p * (di * dj - delta);
            }
        }
    }
}

/// Potential `f0(x) = log sum_m exp(<m, x>) + bump(x)` over the lattice
/// points `m` of `P`; for the simplex this is Fubini–Study,
/// `log(1 + sum_i e^{x_i})`.
///
/// `angular` is the amplitude of a deliberately non-invariant factor
/// `exp(-angular cos(theta_1) e^{-|x|^2/2})` in the fiber metric. It is only
/// ever non-zero when exercising the Gram diagnostic.
#[derive(Debug, Clone)]
pub struct ToricMetric {
    dim: usize,
    monomials: Vec<Vec<f64>>,
    /// `(indices, 2 log |det [1 m_i]|)` over affinely independent
    /// `(n+1)`-subsets of the monomials.
    simplices: Vec<(Vec<usize>, f64)>,
    bump: Option<Bump>,
    pub angular: f64,
    volume: f64,
    calibration: f64,
}

impl ToricMetric {
    /// Fubini–Study type metric for `P` with total volume `volume`.
    pub fn fubini_study(polytope: &Polytope, volume: f64) -> Result<Self> {
        Self::with_perturbation(polytope, volume, None, 0.0)
    }

    pub fn with_perturbation(polytope: &Polytope, volume: f64, bump: Option<Bump>, angular: f64) -> Result<Self> {
        if !polytope.has_integral_vertices() {
            return Err(Error::config("Fubini–Study potential needs a lattice polytope"));
        }
        if !(volume > 0.0 && volume.is_finite()) {
            return Err(Error::config("volume must be positive"));
        }
        let dim = polytope.dim();
        if let Some(b) = &bump {
            if b.center.len() != dim || b.width <= 0.0 {
                return Err(Error::config("bump center/width do not match the polytope"));
            }
        }
        let monomials: Vec<Vec<f64>> = lattice_points(polytope, 1)?
            .points
            .iter()
            .map(|m| m.iter().map(|&c| c as f64).collect())
            .collect();
        let simplices = affine_simplices(&monomials, dim);
        let mut metric = ToricMetric {
            dim,
            monomials,
            simplices,
            bump,
            angular,
            volume,
            calibration: 1.0,
        };
        metric.check_positivity()?;
        let raw = metric.raw_volume()?;
        metric.calibration = volume / raw;
        Ok(metric)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Configured total volume `V` of the L^2 measure.
    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Scale turning `det D^2 f0 dx` into the calibrated volume density.
    pub fn calibration(&self) -> f64 {
        self.calibration
    }

    pub fn is_invariant(&self) -> bool {
        self.angular == 0.0
    }

    /// Softmax weights of the monomials at `x`, and the log-sum-exp.
    fn softmax(&self, x: &[f64]) -> (Vec<f64>, f64) {
        let ex: Vec<f64> = self
            .monomials
            .iter()
            .map(|m| m.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect();
        let top = ex.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = ex.iter().map(|e| (e - top).exp()).collect();
        let s: f64 = w.iter().sum();
        (w.into_iter().map(|v| v / s).collect(), top + s.ln())
    }

    pub fn potential(&self, x: &[f64]) -> f64 {
        let (_, lse) = self.softmax(x);
        lse + self.bump.as_ref().map_or(0.0, |b| b.value(x))
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let (p, _) = self.softmax(x);
        let mut g = vec![0.0; self.dim];
        for (w, m) in p.iter().zip(&self.monomials) {
            for i in 0..self.dim {
                g[i] += w * m[i];
            }
        }
        if let Some(b) = &self.bump {
            b.add_gradient(x, &mut g);
        }
        g
    }

    pub fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let (p, _) = self.softmax(x);
        let n = self.dim;
        let mut mean = vec![0.0; n];
        for (w, m) in p.iter().zip(&self.monomials) {
            for i in 0..n {
                mean[i] += w * m[i];
            }
        }
        let mut h = DMatrix::zeros(n, n);
        for (w, m) in p.iter().zip(&self.monomials) {
            for i in 0..n {
                for j in 0..n {
                    h[(i, j)] += w * (m[i] - mean[i]) * (m[j] - mean[j]);
                }
            }
        }
        if let Some(b) = &self.bump {
            b.add_hessian(x, &mut h);
        }
        h
    }

    /// `log det D^2 f0(x)`; `-inf` where the Hessian degenerates.
    ///
    /// Without a bump the Hessian is the covariance of the monomials under
    /// the softmax weights `p`, and `det = sum_S prod_{i in S} p_i det[1 m_i]^2`
    /// over `(n+1)`-subsets `S`. Every term is positive, so the tails keep
    /// full relative precision.
    pub fn log_det_hessian(&self, x: &[f64]) -> f64 {
        if self.bump.is_some() {
            let d = self.hessian(x).determinant();
            return if d > 0.0 { d.ln() } else { f64::NEG_INFINITY };
        }
        let ex: Vec<f64> = self
            .monomials
            .iter()
            .map(|m| m.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect();
        let top = ex.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = top + ex.iter().map(|e| (e - top).exp()).sum::<f64>().ln();
        let terms: Vec<f64> = self
            .simplices
            .iter()
            .map(|(s, d2)| s.iter().map(|&i| ex[i] - lse).sum::<f64>() + d2)
            .collect();
        let t = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if t == f64::NEG_INFINITY {
            return t;
        }
        t + terms.iter().map(|v| (v - t).exp()).sum::<f64>().ln()
    }

    pub fn determinant_hessian(&self, x: &[f64]) -> f64 {
        self.log_det_hessian(x).exp()
    }

    /// Calibrated volume density with respect to `dx`.
    pub fn volume_density(&self, x: &[f64]) -> f64 {
        self.calibration * self.determinant_hessian(x)
    }

    /// Profile multiplying `cos(theta_1)` in the non-invariant factor.
    pub fn angular_profile(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        self.angular * (-0.5 * r2).exp()
    }

    /// `f0(x) - h_P(x)`: lies in `[0, log #(P ∩ Z^n)]` when the growth of
    /// `f0` is compatible with `P`.
    pub fn growth_defect(&self, polytope: &Polytope, x: &[f64]) -> f64 {
        self.potential(x) - polytope.support(x)
    }

    /// Smallest eigenvalue of the central-difference Hessian of `f0` at `x`.
    pub fn min_eigenvalue_fd(&self, x: &[f64], h: f64) -> f64 {
        let n = self.dim;
        let mut m = DMatrix::zeros(n, n);
        let mut p = x.to_vec();
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for (si, sj, sign) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                    p.copy_from_slice(x);
                    p[i] += si * h;
                    p[j] += sj * h;
                    acc += sign * self.potential(&p);
                }
                m[(i, j)] = acc / (4.0 * h * h);
            }
        }
        SymmetricEigen::new(m).eigenvalues.min()
    }

    fn check_positivity(&self) -> Result<()> {
        let per_axis: usize = if self.dim == 1 { 129 } else { 17 };
        let reach = 8.0;
        let step = 2.0 * reach / (per_axis - 1) as f64;
        let total = per_axis.pow(self.dim as u32);
        let mut x = vec![0.0; self.dim];
        for idx in 0..total {
            let mut r = idx;
            for xi in x.iter_mut() {
                *xi = -reach + step * (r % per_axis) as f64;
                r /= per_axis;
            }
            let lam = self.min_eigenvalue_fd(&x, 1e-2);
            if !(lam > 0.0) {
                return Err(Error::config(format!(
                    "potential is not strictly convex at x = {x:?} (min Hessian eigenvalue {lam:.3e})"
                )));
            }
        }
        Ok(())
    }

    fn raw_volume(&self) -> Result<f64> {
        let log_f = |x: &[f64]| self.log_det_hessian(x);
        let (lo, hi, peak) = support_box(&log_f, self.dim, 64.0, 36.0);
        let q = Adaptive::new(1e-13, 0.0);
        let f = |x: &[f64]| (self.log_det_hessian(x) - peak).exp();
        Ok(q.integrate_box(&f, &lo, &hi)?.value * peak.exp())
    }
}

fn affine_simplices(monomials: &[Vec<f64>], dim: usize) -> Vec<(Vec<usize>, f64)> {
    let mut out = Vec::new();
    let mut subset: Vec<usize> = (0..=dim).collect();
    if monomials.len() < dim + 1 {
        return out;
    }
    loop {
        let m = DMatrix::from_fn(dim + 1, dim + 1, |r, c| if c == 0 { 1.0 } else { monomials[subset[r]][c - 1] });
        let d = m.determinant().round();
        if d != 0.0 {
            out.push((subset.clone(), 2.0 * d.abs().ln()));
        }
        // next combination in lexicographic order
        let mut i = dim + 1;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if subset[i] < monomials.len() - (dim + 1 - i) {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        subset[i] += 1;
        for j in i + 1..=dim {
            subset[j] = subset[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cp1_fubini_study() {
        let p = Polytope::unit_segment();
        let m = ToricMetric::fubini_study(&p, 1.0).unwrap();
        // the segment has length 1, so no rescaling is needed
        assert!((m.calibration() - 1.0).abs() < 1e-12);
        let x = [0.3];
        assert!((m.potential(&x) - (1.0 + 0.3f64.exp()).ln()).abs() < 1e-15);
        let s = 1.0 / (1.0 + (-0.3f64).exp());
        assert!((m.gradient(&x)[0] - s).abs() < 1e-15);
        assert!((m.hessian(&x)[(0, 0)] - s * (1.0 - s)).abs() < 1e-15);
    }

    #[test]
    fn cp2_volume_is_simplex_area() {
        let p = Polytope::standard_simplex(2);
        let m = ToricMetric::fubini_study(&p, 1.0).unwrap();
        assert!((m.calibration() - 2.0).abs() < 1e-9, "{}", m.calibration());
    }

    #[test]
    fn growth_matches_support_function() {
        let p = Polytope::standard_simplex(2);
        let m = ToricMetric::fubini_study(&p, 1.0).unwrap();
        for x in [[8.0, -8.0], [-8.0, -8.0], [8.0, 8.0], [0.0, 8.0]] {
            let d = m.growth_defect(&p, &x);
            assert!((0.0..=3f64.ln() + 1e-12).contains(&d));
        }
        assert!(m.growth_defect(&p, &[40.0, -40.0]) < 1e-15);
    }

    #[test]
    fn small_bump_keeps_convexity_large_one_fails() {
        let p = Polytope::unit_segment();
        let bump = Bump {
            amplitude: 0.02,
            center: vec![0.0],
            width: 1.0,
        };
        let m = ToricMetric::with_perturbation(&p, 1.0, Some(bump.clone()), 0.0).unwrap();
        // a compactly concentrated bump does not change the total volume
        assert!((m.calibration() - 1.0).abs() < 1e-9);
        let big = Bump { amplitude: -2.0, ..bump };
        assert!(ToricMetric::with_perturbation(&p, 1.0, Some(big), 0.0).is_err());
    }

    #[test]
    fn subset_determinant_matches_covariance() {
        let sq = Polytope::from_integer_vertices(&[&[0, 0], &[2, 0], &[0, 1], &[2, 1]], "box").unwrap();
        for p in [Polytope::standard_simplex(2), sq, Polytope::unit_segment()] {
            let m = ToricMetric::fubini_study(&p, 1.0).unwrap();
            for x in [[0.0, 0.0], [1.3, -0.4], [-2.0, 3.0]] {
                let x = &x[..p.dim()];
                let direct = m.hessian(x).determinant();
                let viaset = m.determinant_hessian(x);
                assert!((direct - viaset).abs() < 1e-13 * direct.abs().max(1e-3), "{direct} {viaset}");
            }
        }
    }

    #[test]
    fn volume_scales_density() {
        let p = Polytope::unit_segment();
        let m = ToricMetric::fubini_study(&p, 3.0).unwrap();
        assert!((m.calibration() - 3.0).abs() < 1e-10);
        assert!((m.volume_density(&[0.0]) - 0.75).abs() < 1e-10);
    }
}
