//! Uniform grids in `(x, t)` and functions sampled on them.
//!
//! Nodes are stored with the `x` axes first (row-major) and `t` last and
//! fastest. A resolution of `N` means `N` intervals, hence `N + 1` nodes,
//! per axis.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x_lo: Vec<f64>,
    pub x_hi: Vec<f64>,
    /// Intervals per `x` axis.
    pub x_cells: Vec<usize>,
    /// The `t` axis is `[-depth, 0]`.
    pub depth: f64,
    pub t_cells: usize,
}

impl Grid {
    pub fn new(x_lo: Vec<f64>, x_hi: Vec<f64>, x_cells: Vec<usize>, depth: f64, t_cells: usize) -> Result<Self> {
        let n = x_lo.len();
        if n == 0 || x_hi.len() != n || x_cells.len() != n {
            return Err(Error::config("grid x-box and cell counts must share a positive dimension"));
        }
        if x_lo.iter().zip(&x_hi).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::config("grid x-box must be strictly increasing along each axis"));
        }
        if !(depth > 0.0 && depth.is_finite()) {
            return Err(Error::config("grid depth T must be positive"));
        }
        if x_cells.iter().any(|&c| c < 2) || t_cells < 2 {
            return Err(Error::config("grid needs at least two cells per axis"));
        }
        Ok(Grid {
            x_lo,
            x_hi,
            x_cells,
            depth,
            t_cells,
        })
    }

    /// `[-half_width, half_width]^n x [-depth, 0]` with `cells` intervals
    /// on every axis.
    pub fn cube(n: usize, half_width: f64, depth: f64, cells: usize) -> Result<Self> {
        Grid::new(vec![-half_width; n], vec![half_width; n], vec![cells; n], depth, cells)
    }

    /// `x` dimension.
    pub fn dim(&self) -> usize {
        self.x_lo.len()
    }

    pub fn hx(&self, d: usize) -> f64 {
        (self.x_hi[d] - self.x_lo[d]) / self.x_cells[d] as f64
    }

    pub fn ht(&self) -> f64 {
        self.depth / self.t_cells as f64
    }

    /// Spacing along axis `a` of `(x_1, ..., x_n, t)`.
    pub fn spacing(&self, a: usize) -> f64 {
        if a < self.dim() {
            self.hx(a)
        } else {
            self.ht()
        }
    }

    pub fn x_nodes(&self) -> usize {
        self.x_cells.iter().map(|c| c + 1).product()
    }

    pub fn t_nodes(&self) -> usize {
        self.t_cells + 1
    }

    pub fn len(&self) -> usize {
        self.x_nodes() * self.t_nodes()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Node counts along `(x_1, ..., x_n, t)`.
    pub fn shape(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.x_cells.iter().map(|c| c + 1).collect();
        s.push(self.t_nodes());
        s
    }

    /// Flat-index strides along `(x_1, ..., x_n, t)`.
    pub fn strides(&self) -> Vec<usize> {
        let shape = self.shape();
        let mut st = vec![1; shape.len()];
        for a in (0..shape.len() - 1).rev() {
            st[a] = st[a + 1] * shape[a + 1];
        }
        st
    }

    pub fn t_at(&self, j: usize) -> f64 {
        -self.depth + self.ht() * j as f64
    }

    /// Index of the `t` node closest to `t`.
    pub fn t_index(&self, t: f64) -> usize {
        (((t + self.depth) / self.ht()).round().max(0.0) as usize).min(self.t_cells)
    }

    /// Multi-index of `x` node number `ix`.
    pub fn x_multi(&self, ix: usize) -> Vec<usize> {
        let mut r = ix;
        let mut m = vec![0; self.dim()];
        for d in (0..self.dim()).rev() {
            let c = self.x_cells[d] + 1;
            m[d] = r % c;
            r /= c;
        }
        m
    }

    pub fn x_at(&self, ix: usize) -> Vec<f64> {
        self.x_multi(ix)
            .iter()
            .enumerate()
            .map(|(d, &i)| self.x_lo[d] + self.hx(d) * i as f64)
            .collect()
    }

    /// Multi-index along `(x_1, ..., x_n, t)` of flat node `i`.
    pub fn multi(&self, i: usize) -> Vec<usize> {
        let mut m = self.x_multi(i / self.t_nodes());
        m.push(i % self.t_nodes());
        m
    }

    pub fn flat(&self, multi: &[usize]) -> usize {
        multi.iter().zip(self.strides()).map(|(m, s)| m * s).sum()
    }

    /// Coordinates `(x_1, ..., x_n, t)` of flat node `i`.
    pub fn point(&self, i: usize) -> Vec<f64> {
        let mut p = self.x_at(i / self.t_nodes());
        p.push(self.t_at(i % self.t_nodes()));
        p
    }

    pub fn is_interior(&self, multi: &[usize]) -> bool {
        self.shape().iter().zip(multi).all(|(s, m)| *m > 0 && *m + 1 < *s)
    }
}

/// Level tag of a sampled function.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tag {
    Level(u32),
    Psi(u32),
    Envelope,
    Other(String),
}

impl std::fmt::Display for Tag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tag::Level(k) => write!(f, "{k}"),
            Tag::Psi(k) => write!(f, "psi{k}"),
            Tag::Envelope => write!(f, "envelope"),
            Tag::Other(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub tag: Tag,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>, tag: Tag) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::config(format!(
                "grid function has {} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical {
                message: format!("non-finite value at node {:?}", grid.point(i)),
                achieved: values[i],
                required: 0.0,
            });
        }
        Ok(GridFunction { grid, values, tag })
    }

    /// Samples `f(x, t)` at every node, in parallel over `x` nodes.
    pub fn sample<F>(grid: &Grid, tag: Tag, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        use rayon::prelude::*;
        let nt = grid.t_nodes();
        let values: Vec<f64> = (0..grid.x_nodes())
            .into_par_iter()
            .flat_map_iter(|ix| {
                let mut p = grid.x_at(ix);
                p.push(0.0);
                let n = p.len() - 1;
                (0..nt)
                    .map(|j| {
                        p[n] = grid.t_at(j);
                        f(&p)
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        GridFunction::new(grid.clone(), values, tag)
    }

    pub fn at(&self, multi: &[usize]) -> f64 {
        self.values[self.grid.flat(multi)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Values on the slice `t = t_j`, in `x`-node order.
    pub fn t_slice(&self, j: usize) -> Vec<f64> {
        let nt = self.grid.t_nodes();
        (0..self.grid.x_nodes()).map(|ix| self.values[ix * nt + j]).collect()
    }

    pub fn same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::config("grid functions live on different grids"));
        }
        Ok(())
    }

    /// Nodewise `self - other`.
    pub fn minus(&self, other: &GridFunction, tag: Tag) -> Result<GridFunction> {
        self.same_grid(other)?;
        let v = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        GridFunction::new(self.grid.clone(), v, tag)
    }

    /// Central-difference Hessian in `(x, t)` at an interior node; mixed
    /// terms use the four-point stencil.
    pub fn fd_hessian(&self, multi: &[usize]) -> DMatrix<f64> {
        let dims = multi.len();
        let st = self.grid.strides();
        let c = self.grid.flat(multi);
        let v = &self.values;
        let mut h = DMatrix::zeros(dims, dims);
        for a in 0..dims {
            let ha = self.grid.spacing(a);
            h[(a, a)] = (v[c + st[a]] - 2.0 * v[c] + v[c - st[a]]) / (ha * ha);
            for b in a + 1..dims {
                let hb = self.grid.spacing(b);
                let m = (v[c + st[a] + st[b]] - v[c + st[a] - st[b]] - v[c - st[a] + st[b]] + v[c - st[a] - st[b]])
                    / (4.0 * ha * hb);
                h[(a, b)] = m;
                h[(b, a)] = m;
            }
        }
        h
    }

    pub fn max_diff(&self, other: &GridFunction) -> Result<f64> {
        self.same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_nodes() {
        let g = Grid::cube(1, 8.0, 8.0, 256).unwrap();
        assert_eq!(g.len(), 257 * 257);
        assert_eq!(g.ht(), 1.0 / 32.0);
        for t in [-0.5, -1.0, -2.0, 0.0, -8.0] {
            assert_eq!(g.t_at(g.t_index(t)), t);
        }
        let i = g.flat(&[3, 17]);
        assert_eq!(g.multi(i), vec![3, 17]);
        assert_eq!(g.point(i), vec![-8.0 + 3.0 / 16.0, -8.0 + 17.0 / 32.0]);
        assert!(g.is_interior(&[1, 1]) && !g.is_interior(&[0, 5]) && !g.is_interior(&[5, 256]));
    }

    #[test]
    fn two_dimensional_strides() {
        let g = Grid::new(vec![-1.0, -2.0], vec![1.0, 2.0], vec![4, 8], 1.0, 2).unwrap();
        assert_eq!(g.shape(), vec![5, 9, 3]);
        assert_eq!(g.strides(), vec![27, 3, 1]);
        let f = GridFunction::sample(&g, Tag::Other("sum".into()), |p| p[0] + 10.0 * p[1] + 100.0 * p[2]).unwrap();
        let m = [2, 3, 1];
        assert_eq!(f.at(&m), 0.0 + 10.0 * (-0.5) + 100.0 * (-0.5));
    }

    #[test]
    fn invalid_grids() {
        assert!(Grid::cube(1, -1.0, 8.0, 16).is_err());
        assert!(Grid::cube(1, 1.0, 0.0, 16).is_err());
        assert!(Grid::cube(1, 1.0, 1.0, 1).is_err());
        let g = Grid::cube(1, 1.0, 1.0, 4).unwrap();
        assert!(GridFunction::new(g.clone(), vec![0.0; 3], Tag::Envelope).is_err());
        assert!(GridFunction::new(g, vec![f64::NAN; 25], Tag::Envelope).is_err());
    }
}
