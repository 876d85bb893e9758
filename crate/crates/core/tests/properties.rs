//! Property suites across modules on randomly generated weight data.

use bergman_rays::lower_triangular::{expand_power, verify_support};
use bergman_rays::ma::{comparison_check, ma_measure_exact};
use bergman_rays::ray::{Grid, GridFunction, RayBundle, RaySettings, Tag};
use bergman_rays::toric::{build_basis, Polytope, ToricMetric};
use bergman_rays::weights::{AffinePiece, Combinator, GeneratorSpec, Rounding, WeightSystem};
use proptest::prelude::*;

fn generator(pieces: &[(i64, i64)], combinator: Combinator) -> WeightSystem {
    let spec = GeneratorSpec {
        combinator,
        pieces: pieces
            .iter()
            .map(|(s, c)| AffinePiece {
                slope: vec![s.to_string()],
                intercept: c.to_string(),
            })
            .collect(),
        rounding: Rounding::Ceil,
    };
    WeightSystem::from_generator(&Polytope::unit_segment(), &spec).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Psi_k stays above the explicit lower bound and every level is convex
    /// in (x, t), for concave piecewise-affine generators.
    #[test]
    fn uniform_bound_and_convexity(pieces in prop::collection::vec((-3i64..=3, -2i64..=2), 1..3)) {
        let p = Polytope::unit_segment();
        let m = ToricMetric::fubini_study(&p, 1.0).unwrap();
        let ws = generator(&pieces, Combinator::Min);
        let grid = Grid::cube(1, 6.0, 6.0, 24).unwrap();
        let settings = RaySettings { k_cut: 2, ..RaySettings::default() };
        let b = RayBundle::build(&m, &ws, &[1, 2, 3, 4], &grid, &settings).unwrap();
        prop_assert_eq!(b.diagnostics.uniform_bound.violations, 0);
        for level in &b.bergman {
            let ma = ma_measure_exact(level.field(), &grid, m.calibration()).unwrap();
            prop_assert!(ma.min_det >= -1e-12);
        }
        for l in &b.diagnostics.levels {
            prop_assert!(l.sharp_residual <= 1e-12);
            prop_assert!(l.t_derivative.holds);
        }
    }

    /// Generator weights satisfy the support condition of the power expansion.
    #[test]
    fn generator_weights_are_supported(pieces in prop::collection::vec((-3i64..=3, -2i64..=2), 1..3), k in 2u32..6) {
        let p = Polytope::unit_segment();
        let m = ToricMetric::fubini_study(&p, 1.0).unwrap();
        let ws = generator(&pieces, Combinator::Min);
        let b1 = build_basis(&p, 1, &m, 1e-12).unwrap();
        let bk = build_basis(&p, k, &m, 1e-12).unwrap();
        for beta in &b1.index.points {
            let e = expand_power(beta, &b1, &bk, &m, 1e-12).unwrap();
            prop_assert!(verify_support(&e, &ws, &b1).unwrap().holds);
        }
    }

    /// Comparison inequality for a convex quadratic and a small bump above it.
    #[test]
    fn comparison_on_quadratic_pairs(a in 0.5f64..2.0, frac in 0.05f64..0.3, r in 0.6f64..1.4, cx in -0.5f64..0.5, ct in -2.5f64..-1.5) {
        let grid = Grid::cube(1, 2.0, 4.0, 48).unwrap();
        let bg = GridFunction::sample(&grid, Tag::Other("bg".into()), |_| 0.0).unwrap();
        let eps = frac * a * r * r / 2.0;
        let u = GridFunction::sample(&grid, Tag::Other("u".into()), |y| 0.5 * a * (y[0] * y[0] + (y[1] + 2.0).powi(2))).unwrap();
        let v = GridFunction::sample(&grid, Tag::Other("v".into()), |y| {
            let d2 = (y[0] - cx).powi(2) + (y[1] - ct).powi(2);
            0.5 * a * (y[0] * y[0] + (y[1] + 2.0).powi(2)) + eps * (1.0 - d2 / (r * r)).max(0.0)
        }).unwrap();
        let rep = comparison_check(&u, &v, &bg, 1.0, 0.1, 1e-6).unwrap();
        prop_assert!(rep.holds, "{:?}", rep);
        prop_assert!(rep.nodes > 0);
    }
}

#[test]
fn max_combinator_kinked_ray_is_convex() {
    let p = Polytope::unit_segment();
    let m = ToricMetric::fubini_study(&p, 1.0).unwrap();
    let spec = GeneratorSpec {
        combinator: Combinator::Max,
        pieces: vec![
            AffinePiece { slope: vec!["0".into()], intercept: "0".into() },
            AffinePiece { slope: vec!["-1".into()], intercept: "1/2".into() },
        ],
        rounding: Rounding::Ceil,
    };
    let ws = WeightSystem::from_generator(&p, &spec).unwrap();
    let grid = Grid::cube(1, 8.0, 8.0, 32).unwrap();
    let b = RayBundle::build(&m, &ws, &[1, 2, 4, 8, 16], &grid, &RaySettings { k_cut: 4, ..RaySettings::default() }).unwrap();
    assert_eq!(b.envelope.levels, vec![4, 8, 16]);
    assert_eq!(b.diagnostics.uniform_bound.violations, 0);
}
