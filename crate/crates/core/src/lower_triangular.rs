//! Expansion of `(s_beta^(1))^k` in the level-`k` orthonormal basis,
//! `a_{beta alpha} = ∫ <(s_beta^(1))^k, s_alpha^(k)>_{h0^k} dvol`, and the
//! support condition and size bound its coefficients obey.
//!
//! For monomial bases only `alpha = k beta` can carry mass; every
//! coefficient is still computed by quadrature.

use std::io::Write;

use num::BigInt;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::toric::basis::{log_section_norm, normalized_pairing};
use crate::toric::{LatticePoint, OrthonormalBasis, Rational, ToricMetric};
use crate::weights::{format_rational, traceless_of, WeightSystem};

/// Coefficients at or below this magnitude count as zero.
pub const SUPPORT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct TriangularExpansion {
    pub beta: LatticePoint,
    pub k: u32,
    pub alphas: Vec<LatticePoint>,
    pub coefficients: Vec<f64>,
    pub supported: Vec<bool>,
    /// `V^{1/2} M^k`.
    pub bound: f64,
    /// `||(s_beta)^k||^2 - sum |a|^2`.
    pub reconstruction_residual: f64,
}

/// Expansion of the `k`-th power of the level-one section at `beta`.
pub fn expand_power(
    beta: &[i64],
    basis1: &OrthonormalBasis,
    basis_k: &OrthonormalBasis,
    metric: &ToricMetric,
    rel_tol: f64,
) -> Result<TriangularExpansion> {
    let k = basis_k.k();
    let b1 = basis1
        .index
        .position(beta)
        .ok_or_else(|| Error::config(format!("beta = {beta:?} is not a level-one lattice point")))?;
    if basis1.k() != 1 {
        return Err(Error::config("expand_power needs the level-one basis"));
    }
    let kbeta: Vec<i64> = beta.iter().map(|b| b * k as i64).collect();
    // log ||z^{k beta}||^2 at level k, scaled by r_beta^{-2k}
    let log_power = k as f64 * basis1.log_norm_sq[b1];
    let power_norm_sq = (log_section_norm(&kbeta, k, metric, rel_tol)? - log_power).exp();

    let coefficients: Vec<f64> = basis_k
        .index
        .points
        .par_iter()
        .zip(&basis_k.log_norm_sq)
        .map(|(alpha, ln)| normalized_pairing(metric, &kbeta, alpha, k, log_power, *ln, rel_tol))
        .collect::<Result<_>>()?;
    let sum_sq: f64 = coefficients.iter().map(|a| a * a).sum();
    let supported = coefficients.iter().map(|a| a.abs() > SUPPORT_TOL).collect();
    let bound = basis1.volume.sqrt() * basis1.sup_m.powi(k as i32);
    Ok(TriangularExpansion {
        beta: beta.to_vec(),
        k,
        alphas: basis_k.index.points.clone(),
        coefficients,
        supported,
        bound,
        reconstruction_residual: power_norm_sq - sum_sq,
    })
}

impl TriangularExpansion {
    /// Recomputes which coefficients count as nonzero.
    pub fn with_support_tol(mut self, tol: f64) -> Self {
        self.supported = self.coefficients.iter().map(|a| a.abs() > tol).collect();
        self
    }

    pub fn max_abs(&self) -> f64 {
        self.coefficients.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    /// Largest coefficient away from `alpha = k beta`.
    pub fn off_diagonal_max(&self) -> f64 {
        let kbeta: Vec<i64> = self.beta.iter().map(|b| b * self.k as i64).collect();
        self.alphas
            .iter()
            .zip(&self.coefficients)
            .filter(|(a, _)| **a != kbeta)
            .fold(0.0, |m, (_, c)| m.max(c.abs()))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SupportViolation {
    pub alpha: LatticePoint,
    pub coefficient: f64,
    pub lhs: String,
    pub rhs: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SupportReport {
    pub beta: LatticePoint,
    pub k: u32,
    /// `eta_alpha^(k) <= k eta_beta^(1)` on every supported `alpha`.
    pub holds: bool,
    pub violations: Vec<SupportViolation>,
    /// Supported `alpha` failing `lambda_alpha^(k) <= k lambda_beta^(1)`;
    /// diagnostic only.
    pub lambda_form_violations: Vec<SupportViolation>,
}

pub fn verify_support(exp: &TriangularExpansion, ws: &WeightSystem, basis1: &OrthonormalBasis) -> Result<SupportReport> {
    let eta1 = ws.weights_on(&basis1.index)?;
    let idx_k = crate::toric::lattice_points(ws.polytope(), exp.k)?;
    if idx_k.points != exp.alphas {
        return Err(Error::config("expansion and weight system use different lattice indices"));
    }
    let etak = ws.weights_on(&idx_k)?;
    let lam1 = traceless_of(&eta1);
    let lamk = traceless_of(&etak);
    let b = basis1
        .index
        .position(&exp.beta)
        .ok_or_else(|| Error::config("beta is not a level-one lattice point"))?;
    let kk = exp.k as i64;
    let k_eta_beta = kk * eta1[b];
    let k_lam_beta = lam1[b].clone() * Rational::from_integer(BigInt::from(kk));

    let mut violations = Vec::new();
    let mut lambda_form_violations = Vec::new();
    for (i, alpha) in exp.alphas.iter().enumerate() {
        if !exp.supported[i] {
            continue;
        }
        if etak[i] > k_eta_beta {
            violations.push(SupportViolation {
                alpha: alpha.clone(),
                coefficient: exp.coefficients[i],
                lhs: etak[i].to_string(),
                rhs: k_eta_beta.to_string(),
            });
        }
        if lamk[i] > k_lam_beta {
            lambda_form_violations.push(SupportViolation {
                alpha: alpha.clone(),
                coefficient: exp.coefficients[i],
                lhs: format_rational(&lamk[i]),
                rhs: format_rational(&k_lam_beta),
            });
        }
    }
    Ok(SupportReport {
        beta: exp.beta.clone(),
        k: exp.k,
        holds: violations.is_empty(),
        violations,
        lambda_form_violations,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub holds: bool,
    pub max_abs: f64,
    pub bound: f64,
    pub margin: f64,
}

/// `max |a_{beta alpha}| <= V^{1/2} M^k`.
pub fn verify_bound(exp: &TriangularExpansion) -> BoundReport {
    let max_abs = exp.max_abs();
    BoundReport {
        holds: max_abs <= exp.bound,
        max_abs,
        bound: exp.bound,
        margin: exp.bound - max_abs,
    }
}

/// CSV rows `beta, k, alpha, a, eta_alpha, k_eta_beta, bound`; lattice
/// points are written with `;` between components.
pub fn write_csv<W: Write>(
    mut w: W,
    expansions: &[TriangularExpansion],
    ws: &WeightSystem,
    basis1: &OrthonormalBasis,
    config_hash: &str,
) -> Result<()> {
    writeln!(w, "# config_hash: {config_hash}")?;
    writeln!(w, "beta,k,alpha,a,eta_alpha,k_eta_beta,bound")?;
    let eta1 = ws.weights_on(&basis1.index)?;
    let join = |p: &[i64]| p.iter().map(i64::to_string).collect::<Vec<_>>().join(";");
    for e in expansions {
        let etak = ws.weights(e.k)?;
        let b = basis1.index.position(&e.beta).expect("beta validated on expansion");
        for (i, alpha) in e.alphas.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{:.16e},{},{},{:.16e}",
                join(&e.beta),
                e.k,
                join(alpha),
                e.coefficients[i],
                etak[i],
                e.k as i64 * eta1[b],
                e.bound
            )?;
        }
    }
    Ok(())
}
