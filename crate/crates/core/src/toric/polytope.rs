//! Lattice polytopes and the lattice points of their dilates.
//!
//! Facets are found by brute force over affinely independent `n`-subsets of
//! vertices, in exact rational arithmetic. That is plenty for the handful of
//! vertices a toric polarization carries.

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

pub type Rational = BigRational;
pub type LatticePoint = Vec<i64>;

/// Supporting half-space `<normal, x> <= offset`.
#[derive(Debug, Clone, PartialEq)]
struct Facet {
    normal: Vec<Rational>,
    offset: Rational,
}

#[derive(Debug, Clone)]
pub struct Polytope {
    dim: usize,
    vertices: Vec<Vec<Rational>>,
    facets: Vec<Facet>,
    pub label: String,
}

impl Polytope {
    pub fn new(vertices: Vec<Vec<Rational>>, label: impl Into<String>) -> Result<Self> {
        let dim = vertices.first().map(Vec::len).unwrap_or(0);
        if dim == 0 {
            return Err(Error::config("polytope has no vertices"));
        }
        if vertices.iter().any(|v| v.len() != dim) {
            return Err(Error::config("polytope vertices have mixed dimensions"));
        }
        let diffs: Vec<Vec<Rational>> = vertices[1..]
            .iter()
            .map(|v| sub(v, &vertices[0]))
            .collect();
        if rank(diffs) < dim {
            return Err(Error::config(format!(
                "polytope vertices do not span a {dim}-dimensional body (empty interior)"
            )));
        }
        let facets = facets(&vertices, dim);
        Ok(Polytope {
            dim,
            vertices,
            facets,
            label: label.into(),
        })
    }

    /// Polytope from integer vertices.
    pub fn from_integer_vertices(vertices: &[&[i64]], label: impl Into<String>) -> Result<Self> {
        let v = vertices
            .iter()
            .map(|p| p.iter().map(|&c| Rational::from_integer(c.into())).collect())
            .collect();
        Polytope::new(v, label)
    }

    /// Unit segment `[0, 1]`: CP^1 polarized by O(1).
    pub fn unit_segment() -> Self {
        Polytope::from_integer_vertices(&[&[0], &[1]], "CP1").expect("segment is valid")
    }

    /// Standard simplex in `R^n`: CP^n polarized by O(1).
    pub fn standard_simplex(n: usize) -> Self {
        let mut verts = vec![vec![0i64; n]];
        for i in 0..n {
            let mut e = vec![0i64; n];
            e[i] = 1;
            verts.push(e);
        }
        let refs: Vec<&[i64]> = verts.iter().map(Vec::as_slice).collect();
        Polytope::from_integer_vertices(&refs, format!("CP{n}")).expect("simplex is valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec<Rational>] {
        &self.vertices
    }

    pub fn has_integral_vertices(&self) -> bool {
        self.vertices.iter().flatten().all(|c| c.is_integer())
    }

    /// Integral vertices, when they are.
    pub fn integer_vertices(&self) -> Option<Vec<LatticePoint>> {
        self.vertices
            .iter()
            .map(|v| v.iter().map(|c| c.to_integer().to_i64()).collect())
            .collect()
    }

    /// Exact membership test for a rational point.
    pub fn contains(&self, p: &[Rational]) -> bool {
        self.facets
            .iter()
            .all(|f| dot(&f.normal, p) <= f.offset)
    }

    /// Whether the integer point `alpha` lies in `k P`.
    pub fn contains_dilate(&self, alpha: &[i64], k: u32) -> bool {
        let kk = Rational::from_integer(BigInt::from(k));
        let p: Vec<Rational> = alpha.iter().map(|&a| Rational::from_integer(a.into())).collect();
        self.facets
            .iter()
            .all(|f| dot(&f.normal, &p) <= &f.offset * &kk)
    }

    /// Support function `h_P(x) = max_{v in P} <v, x>`.
    pub fn support(&self, x: &[f64]) -> f64 {
        self.vertices
            .iter()
            .map(|v| v.iter().zip(x).map(|(c, xi)| to_f64(c) * xi).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Ordered integer points of `k P`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LatticeIndex {
    pub k: u32,
    pub points: Vec<LatticePoint>,
}

impl LatticeIndex {
    /// `N_k + 1`.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn position(&self, alpha: &[i64]) -> Option<usize> {
        self.points.binary_search_by(|p| p.as_slice().cmp(alpha)).ok()
    }
}

/// All integer points of `k P` in lexicographic order.
pub fn lattice_points(polytope: &Polytope, k: u32) -> Result<LatticeIndex> {
    if k == 0 {
        return Err(Error::config("level k must be at least 1"));
    }
    let n = polytope.dim();
    let kk = Rational::from_integer(BigInt::from(k));
    let mut lo = vec![i64::MAX; n];
    let mut hi = vec![i64::MIN; n];
    for v in polytope.vertices() {
        for i in 0..n {
            let c = &v[i] * &kk;
            lo[i] = lo[i].min(c.floor().to_integer().to_i64().unwrap_or(i64::MIN));
            hi[i] = hi[i].max(c.ceil().to_integer().to_i64().unwrap_or(i64::MAX));
        }
    }
    let mut points = Vec::new();
    let mut cur = lo.clone();
    'outer: loop {
        if polytope.contains_dilate(&cur, k) {
            points.push(cur.clone());
        }
        // odometer with the last coordinate fastest gives lexicographic order
        let mut i = n;
        loop {
            if i == 0 {
                break 'outer;
            }
            i -= 1;
            if cur[i] < hi[i] {
                cur[i] += 1;
                for j in i + 1..n {
                    cur[j] = lo[j];
                }
                break;
            }
        }
    }
    if points.is_empty() {
        return Err(Error::config(format!(
            "polytope {} has no lattice points at level {k}",
            polytope.label
        )));
    }
    Ok(LatticeIndex { k, points })
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).fold(Rational::zero(), |acc, (x, y)| acc + x * y)
}

fn sub(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn rank(mut rows: Vec<Vec<Rational>>) -> usize {
    let cols = rows.first().map(Vec::len).unwrap_or(0);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let f = &rows[i][c] / &rows[r][c];
                for j in c..cols {
                    let d = &f * &rows[r][j];
                    rows[i][j] -= d;
                }
            }
        }
        r += 1;
    }
    r
}

fn det(m: &[Vec<Rational>]) -> Rational {
    let n = m.len();
    if n == 0 {
        return Rational::one();
    }
    let mut a = m.to_vec();
    let mut d = Rational::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !a[i][c].is_zero()) else {
            return Rational::zero();
        };
        if p != c {
            a.swap(p, c);
            d = -d;
        }
        d *= &a[c][c];
        for i in c + 1..n {
            let f = &a[i][c] / &a[c][c];
            for j in c..n {
                let t = &f * &a[c][j];
                a[i][j] -= t;
            }
        }
    }
    d
}

/// Normal to the affine hull of `n` points in `R^n` via cofactors.
fn hyperplane_normal(pts: &[&Vec<Rational>], n: usize) -> Vec<Rational> {
    let rows: Vec<Vec<Rational>> = pts[1..].iter().map(|p| sub(p, pts[0])).collect();
    (0..n)
        .map(|j| {
            let minor: Vec<Vec<Rational>> = rows
                .iter()
                .map(|r| {
                    r.iter()
                        .enumerate()
                        .filter(|&(c, _)| c != j)
                        .map(|(_, v)| v.clone())
                        .collect()
                })
                .collect();
            let d = det(&minor);
            if j % 2 == 0 {
                d
            } else {
                -d
            }
        })
        .collect()
}

fn facets(vertices: &[Vec<Rational>], n: usize) -> Vec<Facet> {
    let mut out: Vec<Facet> = Vec::new();
    let mut combo: Vec<usize> = (0..n).collect();
    let m = vertices.len();
    if m < n {
        return out;
    }
    loop {
        let pts: Vec<&Vec<Rational>> = combo.iter().map(|&i| &vertices[i]).collect();
        let normal = hyperplane_normal(&pts, n);
        if normal.iter().any(|c| !c.is_zero()) {
            let offset = dot(&normal, pts[0]);
            let sides: Vec<Rational> = vertices.iter().map(|v| dot(&normal, v) - &offset).collect();
            let facet = if sides.iter().all(|s| !s.is_positive()) {
                Some(Facet { normal, offset })
            } else if sides.iter().all(|s| !s.is_negative()) {
                Some(Facet {
                    normal: normal.iter().map(|c| -c).collect(),
                    offset: -offset,
                })
            } else {
                None
            };
            if let Some(f) = facet.map(normalize) {
                if !out.contains(&f) {
                    out.push(f);
                }
            }
        }
        // next n-combination of 0..m
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if combo[i] < m - n + i {
                combo[i] += 1;
                for j in i + 1..n {
                    combo[j] = combo[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn normalize(f: Facet) -> Facet {
    let scale = f
        .normal
        .iter()
        .find(|c| !c.is_zero())
        .map(|c| c.abs())
        .unwrap_or_else(Rational::one);
    Facet {
        normal: f.normal.iter().map(|c| c / &scale).collect(),
        offset: f.offset / scale,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_count_simplex(n: usize, k: i64) -> usize {
        // points with nonnegative coordinates summing to at most k
        let mut count = 0;
        let mut cur = vec![0i64; n];
        loop {
            if cur.iter().sum::<i64>() <= k {
                count += 1;
            }
            let mut i = 0;
            loop {
                if i == n {
                    return count;
                }
                if cur[i] < k {
                    cur[i] += 1;
                    break;
                }
                cur[i] = 0;
                i += 1;
            }
        }
    }

    #[test]
    fn segment_levels() {
        let p = Polytope::unit_segment();
        let l1 = lattice_points(&p, 1).unwrap();
        assert_eq!(l1.points, vec![vec![0], vec![1]]);
        let l5 = lattice_points(&p, 5).unwrap();
        assert_eq!(l5.len(), 6);
        assert_eq!(l5.points[5], vec![5]);
    }

    #[test]
    fn simplex_counts_match_enumeration() {
        let p = Polytope::standard_simplex(2);
        assert_eq!(lattice_points(&p, 2).unwrap().len(), 6);
        for k in 1..8 {
            assert_eq!(lattice_points(&p, k).unwrap().len(), brute_count_simplex(2, k as i64));
        }
        let p3 = Polytope::standard_simplex(3);
        assert_eq!(lattice_points(&p3, 3).unwrap().len(), brute_count_simplex(3, 3));
    }

    #[test]
    fn lexicographic_and_searchable() {
        let p = Polytope::standard_simplex(2);
        let idx = lattice_points(&p, 3).unwrap();
        let mut sorted = idx.points.clone();
        sorted.sort();
        assert_eq!(sorted, idx.points);
        assert_eq!(idx.position(&[1, 2]), Some(idx.points.iter().position(|q| q == &vec![1, 2]).unwrap()));
        assert_eq!(idx.position(&[3, 1]), None);
    }

    #[test]
    fn counts_strictly_increase() {
        let square = Polytope::from_integer_vertices(&[&[0, 0], &[1, 0], &[0, 1], &[1, 1]], "P1xP1").unwrap();
        let mut last = 0;
        for k in 1..6 {
            let c = lattice_points(&square, k).unwrap().len();
            assert_eq!(c, ((k + 1) * (k + 1)) as usize);
            assert!(c > last);
            last = c;
        }
    }

    #[test]
    fn degenerate_polytopes_rejected() {
        assert!(Polytope::from_integer_vertices(&[&[0, 0], &[1, 1]], "flat").is_err());
        assert!(Polytope::new(vec![], "empty").is_err());
        assert!(lattice_points(&Polytope::unit_segment(), 0).is_err());
    }

    #[test]
    fn rational_vertices_allowed() {
        let half = Rational::new(1.into(), 2.into());
        let p = Polytope::new(vec![vec![Rational::zero()], vec![half]], "half").unwrap();
        assert_eq!(lattice_points(&p, 1).unwrap().len(), 1);
        assert_eq!(lattice_points(&p, 4).unwrap().len(), 3);
        assert!(!p.has_integral_vertices());
    }
}
