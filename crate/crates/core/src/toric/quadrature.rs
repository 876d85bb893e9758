//! Adaptive Gauss–Legendre quadrature on boxes.
//!
//! One-dimensional integrals use global adaptive bisection: the panel with
//! the largest error estimate is split until the summed estimate meets the
//! tolerance. The estimate on a panel is the difference between the rule on
//! the panel and the rule on its two halves. Boxes in `R^n` are handled by
//! nesting the one-dimensional routine.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1);
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let n = order as f64;
        for i in 0..(order + 1) / 2 {
            // Tricomi initial guess, then Newton on P_n
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(order, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(order, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(c + h * x);
        }
        s * h
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone)]
pub struct Adaptive {
    rule: GaussLegendre,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

impl Default for Adaptive {
    fn default() -> Self {
        Adaptive::new(1e-12, 0.0)
    }
}

impl Adaptive {
    pub fn new(rel_tol: f64, abs_tol: f64) -> Self {
        Adaptive {
            rule: GaussLegendre::new(20),
            rel_tol,
            abs_tol,
            max_panels: 4000,
        }
    }

    fn panel<F: FnMut(f64) -> f64>(&self, f: &mut F, a: f64, b: f64) -> Panel {
        let m = 0.5 * (a + b);
        let whole = self.rule.integrate(&mut *f, a, b);
        let halves = self.rule.integrate(&mut *f, a, m) + self.rule.integrate(&mut *f, m, b);
        Panel {
            a,
            b,
            value: halves,
            error: (whole - halves).abs(),
        }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> Result<Estimate> {
        let mut heap = BinaryHeap::new();
        let first = self.panel(&mut f, a, b);
        let mut value = first.value;
        let mut error = first.error;
        heap.push(first);
        loop {
            if !value.is_finite() {
                return Err(Error::Numerical {
                    message: format!("non-finite integrand on [{a}, {b}]"),
                    achieved: f64::INFINITY,
                    required: self.rel_tol,
                });
            }
            let target = self.abs_tol.max(self.rel_tol * value.abs());
            if error <= target {
                return Ok(Estimate { value, error });
            }
            if heap.len() >= self.max_panels {
                return Err(Error::Numerical {
                    message: format!("adaptive quadrature did not converge on [{a}, {b}]"),
                    achieved: error / value.abs().max(f64::MIN_POSITIVE),
                    required: self.rel_tol,
                });
            }
            let worst = heap.pop().expect("heap is non-empty");
            let mid = 0.5 * (worst.a + worst.b);
            let left = self.panel(&mut f, worst.a, mid);
            let right = self.panel(&mut f, mid, worst.b);
            value += left.value + right.value - worst.value;
            error += left.error + right.error - worst.error;
            // re-summing keeps the running totals from drifting
            if heap.len() % 64 == 0 {
                heap.push(left);
                heap.push(right);
                value = heap.iter().map(|p| p.value).sum();
                error = heap.iter().map(|p| p.error).sum();
            } else {
                heap.push(left);
                heap.push(right);
            }
        }
    }

    /// Integral over the box `lo..hi` in `R^n` by nesting.
    ///
    /// For `n > 1` a coarse pass fixes an absolute target
    /// `rel_tol * |I|`; every inner integral then works to a share of that
    /// target instead of to its own relative tolerance, which would demand
    /// pointless accuracy where the integrand is negligible.
    pub fn integrate_box(&self, f: &dyn Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64]) -> Result<Estimate> {
        assert_eq!(lo.len(), hi.len());
        let mut x = vec![0.0; lo.len()];
        if lo.len() == 1 {
            return self.nest(f, lo, hi, 0, &mut x);
        }
        let coarse = Adaptive {
            rule: self.rule.clone(),
            rel_tol: self.rel_tol.max(1e-6),
            abs_tol: self.abs_tol,
            max_panels: self.max_panels,
        };
        let rough = coarse.nest(f, lo, hi, 0, &mut x)?;
        let fine = Adaptive {
            rule: self.rule.clone(),
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol.max(self.rel_tol * rough.value.abs()),
            max_panels: self.max_panels,
        };
        fine.nest(f, lo, hi, 0, &mut x)
    }

    fn nest(&self, f: &dyn Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64], d: usize, x: &mut Vec<f64>) -> Result<Estimate> {
        let n = lo.len();
        if d + 1 == n {
            return self.integrate(
                |xi| {
                    x[d] = xi;
                    f(x)
                },
                lo[d],
                hi[d],
            );
        }
        // roundoff floor keeps inner targets attainable
        let inner = Adaptive {
            rule: self.rule.clone(),
            rel_tol: (self.rel_tol * 0.1).max(1e-14),
            abs_tol: self.abs_tol * 0.1 / (hi[d] - lo[d]).max(1.0),
            max_panels: self.max_panels,
        };
        let mut failure = None;
        let mut inner_err = 0.0f64;
        let outer = self.integrate(
            |xi| {
                let mut xs = x.clone();
                xs[d] = xi;
                match inner.nest(f, lo, hi, d + 1, &mut xs) {
                    Ok(e) => {
                        inner_err = inner_err.max(e.error);
                        e.value
                    }
                    Err(err) => {
                        failure.get_or_insert(err);
                        0.0
                    }
                }
            },
            lo[d],
            hi[d],
        )?;
        if let Some(err) = failure {
            return Err(err);
        }
        Ok(Estimate {
            value: outer.value,
            error: outer.error + inner_err * (hi[d] - lo[d]),
        })
    }
}

/// Box outside of which `exp(log_f)` stays below `exp(-tail)` times its
/// peak, found from a coarse scan of `[-reach, reach]^n`. Returns
/// `(lo, hi, peak_log)`.
pub fn support_box(log_f: &dyn Fn(&[f64]) -> f64, n: usize, reach: f64, tail: f64) -> (Vec<f64>, Vec<f64>, f64) {
    let per_axis: usize = match n {
        1 => 257,
        2 => 97,
        3 => 41,
        _ => 17,
    };
    let step = 2.0 * reach / (per_axis - 1) as f64;
    let total = per_axis.pow(n as u32);
    let mut x = vec![0.0; n];
    let mut vals = Vec::with_capacity(total);
    let mut peak = f64::NEG_INFINITY;
    for idx in 0..total {
        let mut r = idx;
        for xi in x.iter_mut().rev() {
            *xi = -reach + step * (r % per_axis) as f64;
            r /= per_axis;
        }
        let v = log_f(&x);
        peak = peak.max(v);
        vals.push(v);
    }
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for (idx, v) in vals.iter().enumerate() {
        if *v >= peak - tail {
            let mut r = idx;
            for d in (0..n).rev() {
                let c = -reach + step * (r % per_axis) as f64;
                r /= per_axis;
                lo[d] = lo[d].min(c - step);
                hi[d] = hi[d].max(c + step);
            }
        }
    }
    for d in 0..n {
        lo[d] = lo[d].max(-reach);
        hi[d] = hi[d].min(reach);
    }
    (lo, hi, peak)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two_and_rule_is_exact_on_polynomials() {
        for order in [1, 2, 5, 10, 20] {
            let gl = GaussLegendre::new(order);
            let s: f64 = gl.weights().iter().sum();
            assert!((s - 2.0).abs() < 1e-14, "order {order}: {s}");
            for deg in 0..(2 * order) {
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                let got = gl.integrate(|x| x.powi(deg as i32), -1.0, 1.0);
                assert!((got - exact).abs() < 1e-13, "order {order} deg {deg}");
            }
        }
    }

    #[test]
    fn adaptive_gaussian_tail() {
        let q = Adaptive::new(1e-13, 0.0);
        let e = q.integrate(|x| (-x * x).exp(), -40.0, 40.0).unwrap();
        assert!((e.value - std::f64::consts::PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn adaptive_handles_kink() {
        let q = Adaptive::new(1e-10, 0.0);
        let e = q.integrate(|x: f64| x.abs().sqrt(), -1.0, 1.0).unwrap();
        assert!((e.value - 4.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn box_integral_2d() {
        let q = Adaptive::new(1e-11, 0.0);
        let e = q
            .integrate_box(&|x: &[f64]| (-(x[0] * x[0] + 2.0 * x[1] * x[1])).exp(), &[-12.0, -12.0], &[12.0, 12.0])
            .unwrap();
        let exact = std::f64::consts::PI / 2f64.sqrt();
        assert!((e.value / exact - 1.0).abs() < 1e-10);
    }

    #[test]
    fn non_convergence_reported() {
        let mut q = Adaptive::new(1e-14, 0.0);
        q.max_panels = 3;
        let err = q.integrate(|x: f64| (1.0 / x.abs().max(1e-300)).sqrt(), -1.0, 1.0);
        assert!(matches!(err, Err(Error::Numerical { .. })));
    }

    #[test]
    fn support_box_contains_mass() {
        let (lo, hi, peak) = support_box(&|x: &[f64]| -(x[0] - 3.0).abs(), 1, 64.0, 32.0);
        assert!(peak > -0.3);
        assert!(lo[0] <= 3.0 - 32.0 && hi[0] >= 3.0 + 32.0);
    }
}
