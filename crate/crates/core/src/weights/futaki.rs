//! Leading coefficients of `Tr B_k / (k (N_k + 1))` in powers of `1/k`.
//!
//! For `k` in the polynomial regime both `Tr B_k` and `k (N_k + 1)` are
//! polynomials of degree `n + 1`. They are interpolated exactly from
//! samples and the quotient is expanded as a formal series in `1/k`.

use num::{BigInt, Signed, ToPrimitive, Zero};
use serde::Serialize;

use super::{format_rational, WeightSystem};
use crate::error::{Error, Result};
use crate::toric::{lattice_points, Polytope, Rational};

#[derive(Debug, Clone, Serialize)]
pub struct FutakiExpansion {
    #[serde(serialize_with = "ser_rational")]
    pub f0: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub f1: Rational,
    /// Largest `|p(k) - data(k)|` over samples not used for interpolation.
    pub residual: f64,
    pub samples: Vec<u32>,
    /// Coefficients of the trace polynomial, constant term first.
    #[serde(serialize_with = "ser_rationals")]
    pub trace_poly: Vec<Rational>,
    /// Coefficients of `k (N_k + 1)`, constant term first.
    #[serde(serialize_with = "ser_rationals")]
    pub dimension_poly: Vec<Rational>,
}

fn ser_rational<S: serde::Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format_rational(r))
}

fn ser_rationals<S: serde::Serializer>(r: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(r.iter().map(format_rational))
}

fn q(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Coefficients (constant first) of the Lagrange interpolant through
/// `(xs[i], ys[i])`.
fn interpolate(xs: &[i64], ys: &[Rational]) -> Vec<Rational> {
    let m = xs.len();
    let mut coeffs = vec![Rational::zero(); m];
    for i in 0..m {
        // basis polynomial prod_{j != i} (k - x_j) / (x_i - x_j)
        let mut basis = vec![q(1)];
        let mut denom = q(1);
        for j in 0..m {
            if j == i {
                continue;
            }
            let mut next = vec![Rational::zero(); basis.len() + 1];
            for (d, c) in basis.iter().enumerate() {
                next[d + 1] += c.clone();
                next[d] -= c.clone() * q(xs[j]);
            }
            basis = next;
            denom *= q(xs[i] - xs[j]);
        }
        let scale = ys[i].clone() / denom;
        for (d, c) in basis.into_iter().enumerate() {
            coeffs[d] += c * scale.clone();
        }
    }
    coeffs
}

fn eval(coeffs: &[Rational], x: i64) -> Rational {
    coeffs.iter().rev().fold(Rational::zero(), |acc, c| acc * q(x) + c.clone())
}

/// Exact `F0`, `F1` from trace data at the given levels. The first `n + 2`
/// distinct samples fix the polynomials; any further samples must agree
/// exactly.
pub fn futaki(ws: &WeightSystem, polytope: &Polytope, k_samples: &[u32]) -> Result<FutakiExpansion> {
    let n = polytope.dim();
    let mut ks: Vec<u32> = k_samples.to_vec();
    ks.sort_unstable();
    ks.dedup();
    if ks.len() < n + 2 || ks[0] == 0 {
        return Err(Error::config(format!(
            "need at least {} distinct positive k-samples for a degree-{} fit, got {:?}",
            n + 2,
            n + 1,
            k_samples
        )));
    }
    let mut traces = Vec::with_capacity(ks.len());
    let mut dims = Vec::with_capacity(ks.len());
    for &k in &ks {
        traces.push(Rational::from_integer(ws.trace(k)?));
        dims.push(q(k as i64 * lattice_points(polytope, k)?.len() as i64));
    }
    let xs: Vec<i64> = ks.iter().map(|k| *k as i64).collect();
    let fit = n + 2;
    let b = interpolate(&xs[..fit], &traces[..fit]);
    let c = interpolate(&xs[..fit], &dims[..fit]);

    let mut residuals = Vec::new();
    for i in fit..ks.len() {
        let rb = (eval(&b, xs[i]) - traces[i].clone()).abs();
        let rc = (eval(&c, xs[i]) - dims[i].clone()).abs();
        residuals.push((ks[i], rb.max(rc)));
    }
    let residual = residuals
        .iter()
        .map(|(_, r)| r.to_f64().unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    if residuals.iter().any(|(_, r)| !r.is_zero()) {
        let per_k: Vec<String> = residuals
            .iter()
            .map(|(k, r)| format!("k={k}: {}", format_rational(r)))
            .collect();
        return Err(Error::Numerical {
            message: format!("trace data is not polynomial in k over the samples ({})", per_k.join(", ")),
            achieved: residual,
            required: 0.0,
        });
    }

    let top = n + 1;
    if c[top].is_zero() {
        return Err(Error::Numerical {
            message: "k (N_k + 1) fit has vanishing leading coefficient".into(),
            achieved: 0.0,
            required: 1.0,
        });
    }
    let f0 = b[top].clone() / c[top].clone();
    let f1 = (b[top - 1].clone() - f0.clone() * c[top - 1].clone()) / c[top].clone();
    Ok(FutakiExpansion {
        f0,
        f1,
        residual,
        samples: ks,
        trace_poly: b,
        dimension_poly: c,
    })
}
