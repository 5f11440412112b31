//! Randomized invariants over the whole public surface: group axioms,
//! projection round-trips, exterior-algebra identities, the splitting-
//! constant sandwich, and Jacobian route agreement.

use carnot::algebra::{GradedAlgebra, Point};
use carnot::exterior::Multivector;
use carnot::fixtures;
use carnot::graph;
use carnot::metric::{Cone, Distance};
use carnot::splitting::ComplementaryCouple;
use nalgebra::DMatrix;
use proptest::prelude::*;
use std::sync::OnceLock;

const FIXTURES: [&str; 3] = ["heisenberg1", "heisenberg2", "engel"];

fn algebra(idx: usize) -> GradedAlgebra {
    fixtures::algebra_by_name(FIXTURES[idx % 3]).unwrap()
}

fn couple(idx: usize) -> (GradedAlgebra, ComplementaryCouple) {
    let name = FIXTURES[idx % 3];
    let alg = fixtures::algebra_by_name(name).unwrap();
    let w = fixtures::vertical_subgroup(name, &alg).unwrap();
    let v = fixtures::horizontal_subgroup(name, &alg).unwrap();
    let c = ComplementaryCouple::new(&alg, w, v).unwrap();
    (alg, c)
}

fn point(alg: &GradedAlgebra, raw: &[f64]) -> Point {
    alg.point(raw[..alg.dim()].to_vec()).unwrap()
}

fn max_abs_diff(a: &Point, b: &Point) -> f64 {
    a.coords().iter().zip(b.coords()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

proptest! {
    #[test]
    fn group_axioms(
        idx in 0usize..3,
        a in prop::collection::vec(-2.0f64..2.0, 5),
        b in prop::collection::vec(-2.0f64..2.0, 5),
        c in prop::collection::vec(-2.0f64..2.0, 5),
        t in 0.25f64..4.0,
    ) {
        let alg = algebra(idx);
        let (x, y, z) = (point(&alg, &a), point(&alg, &b), point(&alg, &c));
        let assoc = max_abs_diff(
            &alg.multiply(&alg.multiply(&x, &y), &z),
            &alg.multiply(&x, &alg.multiply(&y, &z)),
        );
        prop_assert!(assoc <= 1e-9, "associativity residual {assoc}");
        let e = alg.multiply(&x, &alg.inverse(&x));
        prop_assert!(e.norm_euclid() <= 1e-9);
        let hom = max_abs_diff(
            &alg.dilate(t, &alg.multiply(&x, &y)).unwrap(),
            &alg.multiply(&alg.dilate(t, &x).unwrap(), &alg.dilate(t, &y).unwrap()),
        );
        prop_assert!(hom <= 1e-9, "dilation automorphism residual {hom}");
    }

    #[test]
    fn projections_round_trip(
        idx in 0usize..3,
        a in prop::collection::vec(-2.0f64..2.0, 5),
    ) {
        let (alg, couple) = couple(idx);
        let g = point(&alg, &a);
        let (w, v) = couple.project(&alg, &g);
        let back = alg.multiply(&w, &v);
        prop_assert!(max_abs_diff(&back, &g) <= 1e-10);
        // Idempotence: factors project to themselves.
        let (ww, wv) = couple.project(&alg, &w);
        prop_assert!(max_abs_diff(&ww, &w) <= 1e-10 && wv.norm_euclid() <= 1e-10);
    }

    #[test]
    fn sigma_translation_is_invertible(
        idx in 0usize..3,
        a in prop::collection::vec(-1.5f64..1.5, 5),
        b in prop::collection::vec(-1.5f64..1.5, 5),
    ) {
        let (alg, couple) = couple(idx);
        let x = point(&alg, &a);
        let eta_raw = point(&alg, &b);
        let eta = couple.project_w(&alg, &eta_raw);
        let there = couple.sigma_translate(&alg, &x, &eta).unwrap();
        let back = couple.sigma_translate(&alg, &alg.inverse(&x), &there).unwrap();
        prop_assert!(max_abs_diff(&back, &eta) <= 1e-9);
    }

    #[test]
    fn wedge_is_bilinear_and_alternating(
        u in prop::collection::vec(-3.0f64..3.0, 5),
        v in prop::collection::vec(-3.0f64..3.0, 5),
        w in prop::collection::vec(-3.0f64..3.0, 5),
        s in -2.0f64..2.0,
    ) {
        let mu = Multivector::from_vector(&u);
        let mv = Multivector::from_vector(&v);
        let mw = Multivector::from_vector(&w);
        let lin: Vec<f64> = u.iter().zip(&v).map(|(a, b)| s * a + b).collect();
        let lhs = Multivector::from_vector(&lin).wedge(&mw).unwrap();
        let rhs = mu.wedge(&mw).unwrap().scale(s).add(&mv.wedge(&mw).unwrap()).unwrap();
        for (key, coeff) in lhs.terms() {
            prop_assert!((coeff - rhs.coeff(&key)).abs() <= 1e-9 * (1.0 + coeff.abs()));
        }
        let anti = mu.wedge(&mv).unwrap().add(&mv.wedge(&mu).unwrap()).unwrap();
        prop_assert!(anti.norm() <= 1e-9);
        prop_assert!(mu.wedge(&mu).unwrap().norm() <= 1e-9);
    }

    #[test]
    fn hodge_star_is_an_isometry_and_involution(
        u in prop::collection::vec(-3.0f64..3.0, 4),
        v in prop::collection::vec(-3.0f64..3.0, 4),
    ) {
        let e: Vec<Vec<f64>> = (0..4)
            .map(|i| (0..4).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let orientation = carnot::exterior::orienting_unit_of_span(&e).unwrap();
        let xi = Multivector::from_vector(&u).wedge(&Multivector::from_vector(&v)).unwrap();
        let star = xi.hodge_star(&orientation).unwrap();
        prop_assert!((star.norm() - xi.norm()).abs() <= 1e-9 * (1.0 + xi.norm()));
        // ∗∗ = (−1)^{k(q−k)} on degree 2 in dimension 4: +1.
        let twice = star.hodge_star(&orientation).unwrap();
        let diff = twice.add(&xi.scale(-1.0)).unwrap();
        prop_assert!(diff.norm() <= 1e-9 * (1.0 + xi.norm()));
    }

    #[test]
    fn splitting_constant_sandwich(
        a in prop::collection::vec(-2.0f64..2.0, 2),
        b in -2.0f64..2.0,
    ) {
        // c₀(‖w‖+‖v‖) ≤ ‖wv‖ ≤ ‖w‖+‖v‖ with the sampled splitting constant.
        static C0: OnceLock<f64> = OnceLock::new();
        let alg = fixtures::heisenberg1();
        let d = Distance::d_inf();
        let c0 = *C0.get_or_init(|| {
            let w = fixtures::vertical_subgroup("heisenberg1", &alg).unwrap();
            let v = fixtures::horizontal_subgroup("heisenberg1", &alg).unwrap();
            d.estimate_c0(&alg, &w, &v, 20_000, 99).unwrap().value
        });
        prop_assert!(c0 > 0.0 && c0 <= 1.0 + 1e-12);
        let w = alg.point(vec![0.0, a[0], a[1]]).unwrap();
        let v = alg.point(vec![b, 0.0, 0.0]).unwrap();
        let prod = alg.multiply(&w, &v);
        let (nw, nv, np) = (
            d.norm(&alg, &w).unwrap(),
            d.norm(&alg, &v).unwrap(),
            d.norm(&alg, &prod).unwrap(),
        );
        prop_assert!(np <= (nw + nv) * (1.0 + 1e-12) + 1e-12);
        prop_assert!(np >= c0 * (nw + nv) - 1e-12);
    }

    #[test]
    fn cone_contains_its_axis_and_vertex(
        y in -2.0f64..2.0,
        tau in -2.0f64..2.0,
        alpha in 0.05f64..0.95,
    ) {
        let alg = fixtures::heisenberg1();
        let d = Distance::d_inf();
        let axis = fixtures::vertical_subgroup("heisenberg1", &alg).unwrap();
        let vertex = alg.point(vec![0.4, -0.2, 0.1]).unwrap();
        let cone = Cone::new(vertex.clone(), axis.clone(), alpha).unwrap();
        prop_assert!(d.in_cone(&alg, &cone, &vertex).unwrap());
        let on_axis = alg.multiply(&vertex, &alg.point(vec![0.0, y, tau]).unwrap());
        prop_assert!(d.in_cone(&alg, &cone, &on_axis).unwrap());
    }

    #[test]
    fn minors_formula_matches_gram_determinant(
        rows in 1usize..4,
        cols in 1usize..5,
        entries in prop::collection::vec(-3.0f64..3.0, 16),
    ) {
        let m = DMatrix::from_fn(rows, cols, |i, j| entries[(i * cols + j) % 16]);
        let direct = (DMatrix::identity(rows, rows) + &m * m.transpose()).determinant().max(0.0).sqrt();
        let via_minors = graph::jacobian_minors(&m);
        prop_assert!((via_minors - direct).abs() <= 1e-9 * (1.0 + direct));
    }

    #[test]
    fn intrinsic_jacobian_routes_agree(
        a in -2.0f64..2.0,
    ) {
        let (alg, couple) = couple(0);
        let lin = graph::IntrinsicLinearMap::from_matrix(
            &alg,
            &couple,
            &DMatrix::from_row_slice(1, 1, &[a]),
        ).unwrap();
        let wedge = graph::jacobian_wedge(&couple, &lin).unwrap();
        let minors = graph::jacobian_minors(&DMatrix::from_row_slice(1, 1, &[a]));
        prop_assert!((wedge - minors).abs() <= 1e-9 * (1.0 + minors));
    }
}
