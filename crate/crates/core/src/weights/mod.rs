//! Weights of a C^*-action on the section spaces of a toric test
//! configuration.
//!
//! A weight system is either generated by a rational piecewise-linear `g`
//! on `P`, with `eta_alpha^(k) = round(k g(alpha / k))`, or read from an
//! explicit table. All trace quantities are exact.

mod futaki;

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use num::{BigInt, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::toric::{lattice_points, LatticeIndex, LatticePoint, Polytope, Rational};

pub use futaki::{futaki, FutakiExpansion};

/// How a non-integral `k g(alpha / k)` becomes an integer weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rounding {
    #[default]
    Ceil,
    Floor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combinator {
    #[default]
    Max,
    Min,
}

/// Affine function `<slope, x> + intercept` with rational coefficients
/// written as strings such as `"-1"` or `"1/2"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffinePiece {
    pub slope: Vec<String>,
    pub intercept: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(default)]
    pub combinator: Combinator,
    pub pieces: Vec<AffinePiece>,
    #[serde(default)]
    pub rounding: Rounding,
}

#[derive(Debug, Clone)]
struct Piece {
    slope: Vec<Rational>,
    intercept: Rational,
}

impl Piece {
    /// `k * piece(alpha / k) = <slope, alpha> + k intercept`.
    fn scaled_at(&self, alpha: &[i64], k: u32) -> Rational {
        let mut v = self.intercept.clone() * Rational::from_integer(BigInt::from(k));
        for (s, a) in self.slope.iter().zip(alpha) {
            v += s.clone() * Rational::from_integer(BigInt::from(*a));
        }
        v
    }

    fn at(&self, x: &[Rational]) -> Rational {
        let mut v = self.intercept.clone();
        for (s, xi) in self.slope.iter().zip(x) {
            v += s.clone() * xi.clone();
        }
        v
    }
}

#[derive(Debug, Clone)]
enum Source {
    Generator {
        pieces: Vec<Piece>,
        combinator: Combinator,
        rounding: Rounding,
    },
    /// `k -> (alpha -> eta)`.
    Table(BTreeMap<u32, BTreeMap<LatticePoint, i64>>),
}

#[derive(Debug, Clone)]
pub struct WeightSystem {
    polytope: Polytope,
    source: Source,
}

fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    if let Ok(r) = Rational::from_str(t) {
        return Ok(r);
    }
    Err(Error::config(format!("not a rational number: {s:?}")))
}

impl WeightSystem {
    /// All weights zero: the product configuration.
    pub fn trivial(polytope: &Polytope) -> Self {
        WeightSystem {
            polytope: polytope.clone(),
            source: Source::Generator {
                pieces: vec![Piece {
                    slope: vec![Rational::zero(); polytope.dim()],
                    intercept: Rational::zero(),
                }],
                combinator: Combinator::Max,
                rounding: Rounding::Ceil,
            },
        }
    }

    pub fn from_generator(polytope: &Polytope, spec: &GeneratorSpec) -> Result<Self> {
        if spec.pieces.is_empty() {
            return Err(Error::config("weight generator needs at least one affine piece"));
        }
        let mut pieces = Vec::with_capacity(spec.pieces.len());
        for p in &spec.pieces {
            if p.slope.len() != polytope.dim() {
                return Err(Error::config(format!(
                    "affine piece has {} slope entries, polytope dimension is {}",
                    p.slope.len(),
                    polytope.dim()
                )));
            }
            pieces.push(Piece {
                slope: p.slope.iter().map(|s| parse_rational(s)).collect::<Result<_>>()?,
                intercept: parse_rational(&p.intercept)?,
            });
        }
        let ws = WeightSystem {
            polytope: polytope.clone(),
            source: Source::Generator {
                pieces,
                combinator: spec.combinator,
                rounding: spec.rounding,
            },
        };
        if !ws.is_concave() {
            log::info!("weight generator is not concave on P; weights are still well defined");
        }
        Ok(ws)
    }

    /// Explicit table: rows `(k, alpha, eta)`. Every listed level must
    /// cover all of `kP`.
    pub fn from_table(polytope: &Polytope, rows: &[(u32, LatticePoint, i64)]) -> Result<Self> {
        let mut table: BTreeMap<u32, BTreeMap<LatticePoint, i64>> = BTreeMap::new();
        for (k, alpha, eta) in rows {
            if alpha.len() != polytope.dim() {
                return Err(Error::config(format!("weight row for k = {k} has the wrong dimension")));
            }
            if !polytope.contains_dilate(alpha, *k) {
                return Err(Error::config(format!("weight row alpha = {alpha:?} lies outside {k}P")));
            }
            if table.entry(*k).or_default().insert(alpha.clone(), *eta).is_some() {
                return Err(Error::config(format!("duplicate weight row k = {k}, alpha = {alpha:?}")));
            }
        }
        for (k, entries) in &table {
            let idx = lattice_points(polytope, *k)?;
            if entries.len() != idx.len() {
                return Err(Error::config(format!(
                    "weight table lists {} of the {} lattice points at k = {k}",
                    entries.len(),
                    idx.len()
                )));
            }
        }
        Ok(WeightSystem {
            polytope: polytope.clone(),
            source: Source::Table(table),
        })
    }

    /// CSV with header `k,alpha_1,...,alpha_n,eta`; `#` lines are comments.
    pub fn from_csv(polytope: &Polytope, text: &str) -> Result<Self> {
        let n = polytope.dim();
        let mut rows = Vec::new();
        let mut seen_header = false;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if !seen_header {
                seen_header = true;
                if cells.first() == Some(&"k") {
                    if cells.len() != n + 2 {
                        return Err(Error::config(format!("weight table header has {} columns, expected {}", cells.len(), n + 2)));
                    }
                    continue;
                }
            }
            if cells.len() != n + 2 {
                return Err(Error::config(format!("weight table line {} has {} columns", lineno + 1, cells.len())));
            }
            let int = |s: &str| -> Result<i64> {
                s.parse::<i64>()
                    .map_err(|_| Error::config(format!("weight table line {}: {s:?} is not an integer", lineno + 1)))
            };
            let k = int(cells[0])?;
            if k < 1 {
                return Err(Error::config(format!("weight table line {}: k must be positive", lineno + 1)));
            }
            let alpha = cells[1..=n].iter().map(|c| int(c)).collect::<Result<Vec<_>>>()?;
            rows.push((k as u32, alpha, int(cells[n + 1])?));
        }
        Self::from_table(polytope, &rows)
    }

    pub fn from_csv_path(polytope: &Polytope, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read weight table {}: {e}", path.display())))?;
        Self::from_csv(polytope, &text)
    }

    pub fn polytope(&self) -> &Polytope {
        &self.polytope
    }

    pub fn is_trivial(&self) -> bool {
        match &self.source {
            Source::Generator { pieces, .. } => pieces
                .iter()
                .all(|p| p.slope.iter().all(Zero::is_zero) && p.intercept.is_zero()),
            Source::Table(t) => t.values().all(|m| m.values().all(|e| *e == 0)),
        }
    }

    /// Levels a table provides; `None` for generators, which cover every k.
    pub fn table_levels(&self) -> Option<Vec<u32>> {
        match &self.source {
            Source::Table(t) => Some(t.keys().copied().collect()),
            Source::Generator { .. } => None,
        }
    }

    /// `k g(alpha / k)` exactly; `None` for tables.
    pub fn scaled_generator(&self, alpha: &[i64], k: u32) -> Option<Rational> {
        match &self.source {
            Source::Generator { pieces, combinator, .. } => {
                let vals = pieces.iter().map(|p| p.scaled_at(alpha, k));
                Some(match combinator {
                    Combinator::Max => vals.max().expect("at least one piece"),
                    Combinator::Min => vals.min().expect("at least one piece"),
                })
            }
            Source::Table(_) => None,
        }
    }

    /// A max of affine pieces is concave on `P` only if one piece dominates
    /// at every vertex; a min always is.
    pub fn is_concave(&self) -> bool {
        match &self.source {
            Source::Generator { pieces, combinator, .. } => match combinator {
                Combinator::Min => true,
                Combinator::Max => pieces.iter().any(|p| {
                    self.polytope
                        .vertices()
                        .iter()
                        .all(|v| pieces.iter().all(|q| p.at(v) >= q.at(v)))
                }),
            },
            Source::Table(_) => true,
        }
    }

    /// `eta^(k)` aligned with the lexicographic lattice index of `kP`.
    pub fn weights(&self, k: u32) -> Result<Vec<i64>> {
        let index = lattice_points(&self.polytope, k)?;
        self.weights_on(&index)
    }

    pub fn weights_on(&self, index: &LatticeIndex) -> Result<Vec<i64>> {
        let k = index.k;
        match &self.source {
            Source::Generator { rounding, .. } => index
                .points
                .iter()
                .map(|alpha| {
                    let v = self.scaled_generator(alpha, k).expect("generator");
                    let r = match rounding {
                        Rounding::Ceil => v.ceil(),
                        Rounding::Floor => v.floor(),
                    };
                    r.to_integer()
                        .to_i64()
                        .ok_or_else(|| Error::config(format!("weight at alpha = {alpha:?} overflows i64")))
                })
                .collect(),
            Source::Table(t) => {
                let level = t
                    .get(&k)
                    .ok_or_else(|| Error::config(format!("weight table has no rows for k = {k}")))?;
                index
                    .points
                    .iter()
                    .map(|alpha| {
                        level
                            .get(alpha)
                            .copied()
                            .ok_or_else(|| Error::config(format!("weight table misses alpha = {alpha:?} at k = {k}")))
                    })
                    .collect()
            }
        }
    }

    /// `Tr B_k = sum_alpha eta_alpha^(k)`.
    pub fn trace(&self, k: u32) -> Result<BigInt> {
        Ok(self.weights(k)?.into_iter().map(BigInt::from).sum())
    }

    /// `lambda_alpha^(k) = eta_alpha^(k) - Tr B_k / (N_k + 1)`, exact.
    pub fn traceless(&self, k: u32) -> Result<Vec<Rational>> {
        let eta = self.weights(k)?;
        Ok(traceless_of(&eta))
    }

    /// Upper bound `C` in `|eta_alpha^(k)| <= C k`: `max_P |g| + 1`, with
    /// `max_P |g|` bounded by the largest `|piece|` over the vertices.
    /// Tables use the largest `|eta| / k` they contain.
    pub fn growth_constant(&self) -> f64 {
        match &self.source {
            Source::Generator { pieces, .. } => {
                let mut m = Rational::zero();
                for p in pieces {
                    for v in self.polytope.vertices() {
                        m = m.max(p.at(v).abs());
                    }
                }
                m.to_f64().unwrap_or(f64::INFINITY) + 1.0
            }
            Source::Table(t) => {
                t.iter()
                    .flat_map(|(k, m)| m.values().map(move |e| e.unsigned_abs() as f64 / *k as f64))
                    .fold(0.0, f64::max)
                    + 1.0
            }
        }
    }

    /// `(max_alpha |eta_alpha^(k)|, C k)`.
    pub fn weight_growth(&self, k: u32) -> Result<(i64, f64)> {
        let m = self.weights(k)?.into_iter().map(i64::abs).max().unwrap_or(0);
        Ok((m, self.growth_constant() * k as f64))
    }

    /// Vertices `beta` of `P` with `eta_{k beta}^(k) != k eta_beta^(1)`.
    /// Only vertices where the generator is integral are tested.
    pub fn product_compatibility(&self, k: u32) -> Result<Vec<CompatibilityViolation>> {
        let Some(vertices) = self.polytope.integer_vertices() else {
            return Ok(Vec::new());
        };
        let idx1 = lattice_points(&self.polytope, 1)?;
        let idxk = lattice_points(&self.polytope, k)?;
        let eta1 = self.weights_on(&idx1)?;
        let etak = self.weights_on(&idxk)?;
        let mut out = Vec::new();
        for beta in vertices {
            if let Some(g) = self.scaled_generator(&beta, 1) {
                if !g.is_integer() {
                    continue;
                }
            }
            let kb: Vec<i64> = beta.iter().map(|b| b * k as i64).collect();
            let e1 = eta1[idx1.position(&beta).expect("vertex is a lattice point")];
            let ek = etak[idxk.position(&kb).expect("dilated vertex is a lattice point")];
            if ek != k as i64 * e1 {
                out.push(CompatibilityViolation {
                    beta,
                    k,
                    eta_k: ek,
                    k_eta_1: k as i64 * e1,
                });
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompatibilityViolation {
    pub beta: LatticePoint,
    pub k: u32,
    pub eta_k: i64,
    pub k_eta_1: i64,
}

pub fn traceless_of(eta: &[i64]) -> Vec<Rational> {
    let total: BigInt = eta.iter().copied().map(BigInt::from).sum();
    let mean = Rational::new(total, BigInt::from(eta.len()));
    eta.iter()
        .map(|e| Rational::from_integer(BigInt::from(*e)) - mean.clone())
        .collect()
}

/// `Tr B / (N + 1)` as an exact rational.
pub fn mean_weight(eta: &[i64]) -> Rational {
    let total: BigInt = eta.iter().copied().map(BigInt::from).sum();
    Rational::new(total, BigInt::from(eta.len()))
}

/// Format a rational as `p/q`, or `p` when integral.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear() -> WeightSystem {
        let spec = GeneratorSpec {
            combinator: Combinator::Max,
            pieces: vec![AffinePiece {
                slope: vec!["-1".into()],
                intercept: "1".into(),
            }],
            rounding: Rounding::Ceil,
        };
        WeightSystem::from_generator(&Polytope::unit_segment(), &spec).unwrap()
    }

    fn kinked(rounding: Rounding) -> WeightSystem {
        let spec = GeneratorSpec {
            combinator: Combinator::Max,
            pieces: vec![
                AffinePiece {
                    slope: vec!["0".into()],
                    intercept: "0".into(),
                },
                AffinePiece {
                    slope: vec!["-1".into()],
                    intercept: "1/2".into(),
                },
            ],
            rounding,
        };
        WeightSystem::from_generator(&Polytope::unit_segment(), &spec).unwrap()
    }

    fn q(n: i64) -> Rational {
        Rational::from_integer(BigInt::from(n))
    }

    #[test]
    fn trivial_weights_vanish() {
        let ws = WeightSystem::trivial(&Polytope::standard_simplex(2));
        assert!(ws.is_trivial());
        for k in 1..6 {
            assert!(ws.weights(k).unwrap().iter().all(|e| *e == 0));
        }
    }

    #[test]
    fn linear_weights_are_k_minus_alpha() {
        let ws = linear();
        assert_eq!(ws.weights(2).unwrap(), vec![2, 1, 0]);
        assert_eq!(ws.traceless(2).unwrap(), vec![q(1), q(0), q(-1)]);
        for k in 1..20u32 {
            let eta = ws.weights(k).unwrap();
            let expect: Vec<i64> = (0..=k as i64).map(|a| k as i64 - a).collect();
            assert_eq!(eta, expect);
            assert_eq!(ws.trace(k).unwrap(), BigInt::from(k * (k + 1) / 2));
        }
        assert!(ws.is_concave());
    }

    #[test]
    fn kinked_rounding_only_matters_at_odd_levels() {
        let up = kinked(Rounding::Ceil);
        let down = kinked(Rounding::Floor);
        assert!(!up.is_concave());
        assert_eq!(up.weights(1).unwrap(), vec![1, 0]);
        assert_eq!(down.weights(1).unwrap(), vec![0, 0]);
        assert_eq!(up.weights(3).unwrap(), vec![2, 1, 0, 0]);
        assert_eq!(down.weights(3).unwrap(), vec![1, 0, 0, 0]);
        for k in [2u32, 4, 6, 8] {
            assert_eq!(up.weights(k).unwrap(), down.weights(k).unwrap());
            assert_eq!(up.trace(k).unwrap(), BigInt::from(k * (k + 2) / 8));
        }
    }

    #[test]
    fn growth_bound_holds() {
        for ws in [linear(), kinked(Rounding::Ceil), kinked(Rounding::Floor)] {
            for k in 1..40 {
                let (m, bound) = ws.weight_growth(k).unwrap();
                assert!(m as f64 <= bound);
            }
        }
        assert_eq!(linear().growth_constant(), 2.0);
    }

    #[test]
    fn vertices_scale_like_products() {
        for ws in [linear(), kinked(Rounding::Ceil)] {
            for k in 1..12 {
                assert!(ws.product_compatibility(k).unwrap().is_empty());
            }
        }
    }

    #[test]
    fn csv_round_trip_and_corruption() {
        let p = Polytope::unit_segment();
        let text = "# linear weights\nk,alpha,eta\n1,0,1\n1,1,0\n2,0,2\n2,1,1\n2,2,0\n";
        let ws = WeightSystem::from_csv(&p, text).unwrap();
        assert_eq!(ws.weights(2).unwrap(), vec![2, 1, 0]);
        assert!(ws.product_compatibility(2).unwrap().is_empty());
        assert!(ws.weights(3).is_err());
        let bad = "k,alpha,eta\n1,0,1\n1,1,0\n2,0,5\n2,1,1\n2,2,0\n";
        let ws = WeightSystem::from_csv(&p, bad).unwrap();
        assert_eq!(ws.product_compatibility(2).unwrap().len(), 1);
        assert!(WeightSystem::from_csv(&p, "k,alpha,eta\n2,0,1\n").is_err());
        assert!(WeightSystem::from_csv(&p, "k,alpha,eta\n1,3,1\n").is_err());
    }

    #[test]
    fn simplex_generator() {
        let p = Polytope::standard_simplex(2);
        let spec = GeneratorSpec {
            combinator: Combinator::Min,
            pieces: vec![AffinePiece {
                slope: vec!["1".into(), "0".into()],
                intercept: "0".into(),
            }],
            rounding: Rounding::Floor,
        };
        let ws = WeightSystem::from_generator(&p, &spec).unwrap();
        let idx = lattice_points(&p, 3).unwrap();
        let eta = ws.weights(3).unwrap();
        for (a, e) in idx.points.iter().zip(eta) {
            assert_eq!(a[0], e);
        }
    }

    #[test]
    fn bad_generators_rejected() {
        let p = Polytope::unit_segment();
        let spec = |slope: &str| GeneratorSpec {
            combinator: Combinator::Max,
            pieces: vec![AffinePiece {
                slope: vec![slope.into()],
                intercept: "0".into(),
            }],
            rounding: Rounding::Ceil,
        };
        assert!(WeightSystem::from_generator(&p, &spec("x")).is_err());
        let mut two = spec("1");
        two.pieces[0].slope.push("1".into());
        assert!(WeightSystem::from_generator(&p, &two).is_err());
        assert!(WeightSystem::from_generator(&p, &GeneratorSpec { pieces: vec![], ..spec("1") }).is_err());
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn traceless_weights_sum_to_zero(slope in -5i64..5, num in -7i64..7, den in 1i64..5, k in 1u32..25, floor in any::<bool>()) {
            let spec = GeneratorSpec {
                combinator: Combinator::Max,
                pieces: vec![
                    AffinePiece { slope: vec![slope.to_string()], intercept: format!("{num}/{den}") },
                    AffinePiece { slope: vec!["0".into()], intercept: "0".into() },
                ],
                rounding: if floor { Rounding::Floor } else { Rounding::Ceil },
            };
            let ws = WeightSystem::from_generator(&Polytope::unit_segment(), &spec).unwrap();
            let lam = ws.traceless(k).unwrap();
            let s: Rational = lam.iter().cloned().sum();
            prop_assert!(s.is_zero());
            let (m, bound) = ws.weight_growth(k).unwrap();
            prop_assert!(m as f64 <= bound);
            let eta = ws.weights(k).unwrap();
            let idx = lattice_points(ws.polytope(), k).unwrap();
            for (a, e) in idx.points.iter().zip(&eta) {
                let g = ws.scaled_generator(a, k).unwrap();
                if g.is_integer() {
                    prop_assert_eq!(Rational::from_integer(BigInt::from(*e)), g);
                }
            }
        }
    }
}
