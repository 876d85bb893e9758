//! Weighted Bergman potentials
//! `Phi_k = (1/k) log sum_alpha |w|^{2 eta_alpha} |s_alpha|^2_{h0^k} - (n/k) log k`.
//!
//! In log coordinates `f0 + Phi_k + (n/k) log k` is the scaled log-sum-exp
//! of the affine functions `2 eta_alpha t + <alpha, x> - log r_alpha^2`;
//! `f0` cancels and only enters through the norms.

use num::ToPrimitive;

use super::grid::{Grid, GridFunction, Tag};
use crate::error::{Error, Result};
use crate::lse::LseField;
use crate::toric::{OrthonormalBasis, ToricMetric};
use crate::weights::{mean_weight, WeightSystem};

#[derive(Debug, Clone)]
pub struct BergmanLevel {
    k: u32,
    n: usize,
    field: LseField,
}

impl BergmanLevel {
    /// Level built from arbitrary real weights aligned with `basis.index`.
    pub fn from_real_weights(basis: &OrthonormalBasis, weights: &[f64]) -> Result<Self> {
        if weights.len() != basis.len() {
            return Err(Error::config(format!(
                "{} weights for {} basis sections at k = {}",
                weights.len(),
                basis.len(),
                basis.k()
            )));
        }
        let n = basis.index.points.first().map_or(0, Vec::len);
        let slopes = basis
            .index
            .points
            .iter()
            .zip(weights)
            .map(|(alpha, eta)| {
                let mut v: Vec<f64> = alpha.iter().map(|a| *a as f64).collect();
                v.push(2.0 * eta);
                v
            })
            .collect();
        let offsets = basis.log_norm_sq.iter().map(|l| -l).collect();
        Ok(BergmanLevel {
            k: basis.k(),
            n,
            field: LseField::new(slopes, offsets, 1.0 / basis.k() as f64),
        })
    }

    pub fn new(basis: &OrthonormalBasis, ws: &WeightSystem) -> Result<Self> {
        let eta = ws.weights_on(&basis.index)?;
        let w: Vec<f64> = eta.iter().map(|e| *e as f64).collect();
        Self::from_real_weights(basis, &w)
    }

    /// Same level with the traceless weights `lambda`.
    pub fn traceless(basis: &OrthonormalBasis, ws: &WeightSystem) -> Result<Self> {
        let eta = ws.weights_on(&basis.index)?;
        let mean = mean_weight(&eta);
        let lam: Vec<f64> = eta
            .iter()
            .map(|e| (num::BigRational::from_integer((*e).into()) - mean.clone()).to_f64().unwrap_or(f64::NAN))
            .collect();
        Self::from_real_weights(basis, &lam)
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// `f0 + Phi_k` as a log-sum-exp field in `y = (x, t)`, without the
    /// constant `-(n/k) log k`.
    pub fn field(&self) -> &LseField {
        &self.field
    }

    fn shift(&self) -> f64 {
        self.n as f64 / self.k as f64 * (self.k as f64).ln()
    }

    /// `f0(x) + Phi_k(x, t)`.
    pub fn full(&self, y: &[f64]) -> f64 {
        self.field.value(y) - self.shift()
    }

    /// `Phi_k(x, t)`.
    pub fn phi(&self, metric: &ToricMetric, y: &[f64]) -> f64 {
        let n = self.n;
        self.full(y) - metric.potential(&y[..n])
    }

    /// Exact `d Phi_k / dt`, a weighted mean of `2 eta_alpha / k`.
    pub fn dt(&self, y: &[f64]) -> f64 {
        self.field.gradient(y)[self.n]
    }
}

/// `Phi_k` sampled on `grid`.
pub fn phi_k(basis: &OrthonormalBasis, ws: &WeightSystem, metric: &ToricMetric, grid: &Grid) -> Result<GridFunction> {
    let level = BergmanLevel::new(basis, ws)?;
    sample_level(&level, metric, grid, Tag::Level(basis.k()))
}

pub fn sample_level(level: &BergmanLevel, metric: &ToricMetric, grid: &Grid, tag: Tag) -> Result<GridFunction> {
    if grid.dim() != metric.dim() {
        return Err(Error::config("grid and metric dimensions differ"));
    }
    GridFunction::sample(grid, tag, |y| level.phi(metric, y))
}

/// Largest `|Phi_k - Phi_k^# - (Tr B_k / (k (N_k + 1))) 2t|` over the grid,
/// with `Phi_k^#` built independently from the traceless weights.
pub fn phi_sharp_identity(
    phi: &GridFunction,
    basis: &OrthonormalBasis,
    ws: &WeightSystem,
    metric: &ToricMetric,
    tolerance: f64,
) -> Result<f64> {
    let k = basis.k();
    let sharp = sample_level(&BergmanLevel::traceless(basis, ws)?, metric, &phi.grid, Tag::Other(format!("sharp{k}")))?;
    phi.same_grid(&sharp)?;
    let eta = ws.weights_on(&basis.index)?;
    let ratio = (mean_weight(&eta) / num::BigRational::from_integer(k.into()))
        .to_f64()
        .unwrap_or(f64::NAN);
    let nt = phi.grid.t_nodes();
    let mut worst = 0.0f64;
    for (i, (a, b)) in phi.values.iter().zip(&sharp.values).enumerate() {
        let t = phi.grid.t_at(i % nt);
        worst = worst.max((a - b - ratio * 2.0 * t).abs());
    }
    if !(worst <= tolerance) {
        return Err(Error::invariant(
            format!("Phi_k / Phi_k^# identity residual {worst:.3e} above {tolerance:.1e} at k = {k}"),
            serde_json::json!({ "k": k, "residual": worst, "trace_ratio": ratio }),
        ));
    }
    Ok(worst)
}

/// `Psi_k = Phi_k - Phi_1`.
pub fn psi_k(phi_k: &GridFunction, phi_1: &GridFunction) -> Result<GridFunction> {
    let k = match phi_k.tag {
        Tag::Level(k) => k,
        _ => 0,
    };
    phi_k.minus(phi_1, Tag::Psi(k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toric::{build_basis, Polytope};
    use crate::weights::{AffinePiece, Combinator, GeneratorSpec, Rounding};

    fn linear(p: &Polytope) -> WeightSystem {
        let spec = GeneratorSpec {
            combinator: Combinator::Max,
            pieces: vec![AffinePiece {
                slope: vec!["-1".into()],
                intercept: "1".into(),
            }],
            rounding: Rounding::Ceil,
        };
        WeightSystem::from_generator(p, &spec).unwrap()
    }

    fn closed_form(x: f64, t: f64, k: f64) -> f64 {
        // log((e^{2t} + e^x) / (1 + e^x)) in a cancellation-free form
        let a = (2.0 * t).max(x);
        let num = a + ((2.0 * t - a).exp() + (x - a).exp()).ln();
        let den = x.max(0.0) + (-x.abs()).exp().ln_1p();
        num - den + (1.0 + 1.0 / k).ln() / k
    }

    #[test]
    fn linear_weights_reproduce_closed_form() {
        let p = Polytope::unit_segment();
        let m = ToricMetric::fubini_study(&p, 1.0).unwrap();
        let ws = linear(&p);
        let grid = Grid::cube(1, 8.0, 8.0, 64).unwrap();
        for k in [1u32, 2, 5, 10] {
            let b = build_basis(&p, k, &m, 1e-12).unwrap();
            let f = phi_k(&b, &ws, &m, &grid).unwrap();
            for (i, v) in f.values.iter().enumerate() {
                let y = grid.point(i);
                assert!((v - closed_form(y[0], y[1], k as f64)).abs() < 1e-9, "k={k} at {y:?}");
            }
            let res = phi_sharp_identity(&f, &b, &ws, &m, 1e-12).unwrap();
            assert!(res <= 1e-12);
        }
    }

    #[test]
    fn trivial_weights_give_constant() {
        let p = Polytope::unit_segment();
        let m = ToricMetric::fubini_study(&p, 1.0).unwrap();
        let ws = WeightSystem::trivial(&p);
        let grid = Grid::cube(1, 8.0, 8.0, 16).unwrap();
        let b = build_basis(&p, 10, &m, 1e-12).unwrap();
        let f = phi_k(&b, &ws, &m, &grid).unwrap();
        for v in &f.values {
            assert!((v - 0.009_531_017_980_432_486).abs() < 1e-10);
        }
        let level = BergmanLevel::new(&b, &ws).unwrap();
        assert_eq!(level.dt(&[0.3, -1.0]), 0.0);
    }

    #[test]
    fn psi_of_linear_config_is_constant() {
        let p = Polytope::unit_segment();
        let m = ToricMetric::fubini_study(&p, 1.0).unwrap();
        let ws = linear(&p);
        let grid = Grid::cube(1, 6.0, 4.0, 16).unwrap();
        let b1 = build_basis(&p, 1, &m, 1e-12).unwrap();
        let b8 = build_basis(&p, 8, &m, 1e-12).unwrap();
        let f1 = phi_k(&b1, &ws, &m, &grid).unwrap();
        let f8 = phi_k(&b8, &ws, &m, &grid).unwrap();
        let psi = psi_k(&f8, &f1).unwrap();
        let expect = (9.0f64 / 8.0).ln() / 8.0 - 2f64.ln();
        assert!(psi.values.iter().all(|v| (v - expect).abs() < 1e-9));
        assert!(psi_k(&f1, &f1).unwrap().max_abs() == 0.0);
        let other = Grid::cube(1, 6.0, 4.0, 8).unwrap();
        let g = phi_k(&b1, &ws, &m, &other).unwrap();
        assert!(psi_k(&f8, &g).is_err());
    }

    #[test]
    fn simplex_trivial_weights_match_bergman_sum() {
        // for CP^2 the Bergman sum is N_k + 1 = (k+1)(k+2)/2 everywhere
        let p = Polytope::standard_simplex(2);
        let m = ToricMetric::fubini_study(&p, 1.0).unwrap();
        let ws = WeightSystem::trivial(&p);
        let grid = Grid::new(vec![-3.0, -3.0], vec![3.0, 3.0], vec![4, 4], 1.0, 2).unwrap();
        let k = 3u32;
        let b = build_basis(&p, k, &m, 1e-11).unwrap();
        let f = phi_k(&b, &ws, &m, &grid).unwrap();
        // constant Bergman sum (N_k + 1) / V = 10, then the (n/k) log k shift
        let expect = (10.0f64).ln() / 3.0 - 2.0 / 3.0 * 3f64.ln();
        for v in &f.values {
            assert!((v - expect).abs() < 1e-8, "{v} vs {expect}");
        }
    }
}
