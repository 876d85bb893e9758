//! Scaled log-sum-exp of affine functions,
//! `F(y) = scale * log sum_i exp(<v_i, y> + c_i)`.
//!
//! Every Bergman potential `f0 + Phi_k` has this form in `y = (x, t)`, with
//! `v_alpha = (alpha, 2 eta_alpha)` and `scale = 1/k`. Its Hessian is
//! `scale` times the covariance of the `v_i` under the softmax weights, so
//! it is positive semidefinite by construction and computed without
//! differencing.

use nalgebra::{DMatrix, SymmetricEigen};

#[derive(Debug, Clone, PartialEq)]
pub struct LseField {
    slopes: Vec<Vec<f64>>,
    offsets: Vec<f64>,
    scale: f64,
    dim: usize,
}

impl LseField {
    pub fn new(slopes: Vec<Vec<f64>>, offsets: Vec<f64>, scale: f64) -> Self {
        assert!(!slopes.is_empty(), "log-sum-exp of an empty family");
        assert_eq!(slopes.len(), offsets.len());
        let dim = slopes[0].len();
        assert!(slopes.iter().all(|v| v.len() == dim));
        LseField {
            slopes,
            offsets,
            scale,
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.slopes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slopes.is_empty()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn slopes(&self) -> &[Vec<f64>] {
        &self.slopes
    }

    fn exponents(&self, y: &[f64], out: &mut Vec<f64>) -> f64 {
        out.clear();
        let mut top = f64::NEG_INFINITY;
        for (v, c) in self.slopes.iter().zip(&self.offsets) {
            let e = v.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() + c;
            top = top.max(e);
            out.push(e);
        }
        top
    }

    /// Unscaled `log sum exp`, summed in index order.
    pub fn log_sum(&self, y: &[f64]) -> f64 {
        let mut e = Vec::with_capacity(self.len());
        let top = self.exponents(y, &mut e);
        top + e.iter().map(|v| (v - top).exp()).sum::<f64>().ln()
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        self.scale * self.log_sum(y)
    }

    /// Softmax weights at `y`.
    pub fn weights(&self, y: &[f64]) -> Vec<f64> {
        let mut e = Vec::with_capacity(self.len());
        let top = self.exponents(y, &mut e);
        let mut s = 0.0;
        for v in e.iter_mut() {
            *v = (*v - top).exp();
            s += *v;
        }
        for v in e.iter_mut() {
            *v /= s;
        }
        e
    }

    pub fn gradient(&self, y: &[f64]) -> Vec<f64> {
        let p = self.weights(y);
        let mut g = vec![0.0; self.dim];
        for (w, v) in p.iter().zip(&self.slopes) {
            for d in 0..self.dim {
                g[d] += w * v[d];
            }
        }
        g.iter_mut().for_each(|c| *c *= self.scale);
        g
    }

    /// Centered two-pass covariance, times `scale`.
    pub fn hessian(&self, y: &[f64]) -> DMatrix<f64> {
        let p = self.weights(y);
        let n = self.dim;
        let mut mean = vec![0.0; n];
        for (w, v) in p.iter().zip(&self.slopes) {
            for d in 0..n {
                mean[d] += w * v[d];
            }
        }
        let mut h = DMatrix::zeros(n, n);
        let mut dev = vec![0.0; n];
        for (w, v) in p.iter().zip(&self.slopes) {
            for d in 0..n {
                dev[d] = v[d] - mean[d];
            }
            for i in 0..n {
                for j in i..n {
                    h[(i, j)] += w * dev[i] * dev[j];
                }
            }
        }
        for i in 0..n {
            for j in i..n {
                h[(i, j)] *= self.scale;
                h[(j, i)] = h[(i, j)];
            }
        }
        h
    }

    pub fn hessian_det(&self, y: &[f64]) -> f64 {
        self.hessian(y).determinant()
    }

    pub fn hessian_min_eigenvalue(&self, y: &[f64]) -> f64 {
        SymmetricEigen::new(self.hessian(y)).eigenvalues.min()
    }
}

/// `log sum exp(e_i)` of a slice, summed in index order.
pub fn log_sum_exp(e: &[f64]) -> f64 {
    let top = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + e.iter().map(|v| (v - top).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ray() -> LseField {
        // log(e^{2t} + e^x) in y = (x, t)
        LseField::new(vec![vec![0.0, 2.0], vec![1.0, 0.0]], vec![0.0, 0.0], 1.0)
    }

    #[test]
    fn closed_form_ray_is_rank_one() {
        let f = ray();
        for y in [[0.0f64, 0.0], [-3.0, -1.0], [5.0, -7.5]] {
            let (x, t) = (y[0], y[1]);
            let exact = ((2.0 * t).exp() + x.exp()).ln();
            assert!((f.value(&y) - exact).abs() < 1e-14);
            let q = (2.0 * t).exp() / ((2.0 * t).exp() + x.exp());
            let g = f.gradient(&y);
            assert!((g[1] - 2.0 * q).abs() < 1e-15 && (g[0] - (1.0 - q)).abs() < 1e-15);
            assert!(f.hessian_det(&y).abs() < 1e-16);
            assert!(f.hessian_min_eigenvalue(&y) > -1e-16);
        }
    }

    #[test]
    fn survives_huge_exponents() {
        let f = LseField::new(vec![vec![0.0, 512.0], vec![256.0, 0.0]], vec![0.0, -700.0], 1.0 / 256.0);
        let v = f.value(&[8.0, -8.0]);
        assert!(v.is_finite());
        assert!(f.hessian(&[8.0, -8.0]).iter().all(|c| c.is_finite()));
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
    }

    proptest! {
        #[test]
        fn hessian_matches_finite_differences(
            a in proptest::collection::vec(-3.0f64..3.0, 6),
            c in proptest::collection::vec(-2.0f64..2.0, 3),
            y in proptest::collection::vec(-2.0f64..2.0, 2),
        ) {
            let f = LseField::new(vec![a[0..2].to_vec(), a[2..4].to_vec(), a[4..6].to_vec()], c, 0.5);
            let h = 1e-4;
            let hess = f.hessian(&y);
            for i in 0..2 {
                for j in 0..2 {
                    let mut acc = 0.0;
                    for (si, sj, s) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                        let mut p = y.clone();
                        p[i] += si * h;
                        p[j] += sj * h;
                        acc += s * f.value(&p);
                    }
                    prop_assert!((acc / (4.0 * h * h) - hess[(i, j)]).abs() < 1e-5);
                }
            }
            prop_assert!(f.hessian_min_eigenvalue(&y) > -1e-12);
        }
    }
}
