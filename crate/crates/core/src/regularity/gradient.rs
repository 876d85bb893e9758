//! Second-order difference gradients on a grid.

use serde::Serialize;

use crate::ray::{Grid, GridFunction};

#[derive(Debug, Clone, Serialize)]
pub struct GradientField {
    #[serde(skip)]
    pub grid: Grid,
    /// `components[a][i]` is the derivative along axis `a` at node `i`.
    pub components: Vec<Vec<f64>>,
}

impl GradientField {
    pub fn at(&self, i: usize) -> Vec<f64> {
        self.components.iter().map(|c| c[i]).collect()
    }
}

/// Central differences inside, second-order one-sided stencils on the
/// boundary faces; axes with fewer than three nodes fall back to first order.
pub fn gradient(phi: &GridFunction) -> GradientField {
    let g = &phi.grid;
    let shape = g.shape();
    let strides = g.strides();
    let v = &phi.values;
    let components = (0..shape.len())
        .map(|a| {
            let h = g.spacing(a);
            let s = strides[a];
            (0..g.len())
                .map(|i| {
                    let p = g.multi(i)[a];
                    let last = shape[a] - 1;
                    if p > 0 && p < last {
                        (v[i + s] - v[i - s]) / (2.0 * h)
                    } else if shape[a] < 3 {
                        if p == 0 {
                            (v[i + s] - v[i]) / h
                        } else {
                            (v[i] - v[i - s]) / h
                        }
                    } else if p == 0 {
                        (-3.0 * v[i] + 4.0 * v[i + s] - v[i + 2 * s]) / (2.0 * h)
                    } else {
                        (3.0 * v[i] - 4.0 * v[i - s] + v[i - 2 * s]) / (2.0 * h)
                    }
                })
                .collect()
        })
        .collect();
    GradientField {
        grid: g.clone(),
        components,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ray::Tag;

    #[test]
    fn constant_has_zero_gradient() {
        let g = Grid::cube(1, 1.0, 1.0, 8).unwrap();
        let f = GridFunction::sample(&g, Tag::Other("c".into()), |_| 3.5).unwrap();
        let d = gradient(&f);
        assert!(d.components.iter().flatten().all(|c| *c == 0.0));
    }

    #[test]
    fn bilinear_is_exact() {
        let g = Grid::cube(1, 1.0, 2.0, 8).unwrap();
        let f = GridFunction::sample(&g, Tag::Other("xt".into()), |y| y[0] * y[1]).unwrap();
        let d = gradient(&f);
        for i in 0..g.len() {
            let y = g.point(i);
            assert!((d.components[0][i] - y[1]).abs() < 1e-13);
            assert!((d.components[1][i] - y[0]).abs() < 1e-13);
        }
    }

    fn ray_error(cells: usize) -> f64 {
        let g = Grid::cube(1, 4.0, 4.0, cells).unwrap();
        let f = GridFunction::sample(&g, Tag::Other("ray".into()), |y| {
            ((2.0 * y[1]).exp() + y[0].exp()).ln() - y[0].exp().ln_1p()
        })
        .unwrap();
        let d = gradient(&f);
        (0..g.len())
            .map(|i| {
                let y = g.point(i);
                let q = (2.0 * y[1]).exp() / ((2.0 * y[1]).exp() + y[0].exp());
                let gx = 1.0 - q - 1.0 / (1.0 + (-y[0]).exp());
                (d.components[0][i] - gx).abs().max((d.components[1][i] - 2.0 * q).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn closed_form_ray_derivative() {
        let g = Grid::cube(1, 4.0, 4.0, 64).unwrap();
        let f = GridFunction::sample(&g, Tag::Other("ray".into()), |y| {
            ((2.0 * y[1]).exp() + y[0].exp()).ln() - y[0].exp().ln_1p()
        })
        .unwrap();
        let i = g.flat(&[32, g.t_index(-1.0)]);
        assert_eq!(g.point(i), vec![0.0, -1.0]);
        let exact = 2.0 * (-2.0f64).exp() / ((-2.0f64).exp() + 1.0);
        assert!((exact - 0.23840).abs() < 1e-5);
        assert!((gradient(&f).components[1][i] - exact).abs() < 1e-3);
    }

    #[test]
    fn converges_at_second_order() {
        let (e1, e2) = (ray_error(32), ray_error(64));
        let rate = e1 / e2;
        assert!(rate > 3.5 && rate < 4.6, "{e1} {e2}");
    }
}
