mod common;

use common::*;
use discern::geometry::{apply_transform, AxisTransform, BodyKind, Cuboid, Shape, SymmetricBody};
use discern::measures::{
    axis_marginal, monomial_body_moment, orbit_moment, poly_box_moment, pulledback_box_measure, Domain, PolyDensity,
};
use discern::quadrature::{oracle_moment, Tolerance};
use discern::seeding::item_rng;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn additivity_under_splits() {
    for i in 0..10_000u64 {
        let mut rng = item_rng(11, i);
        let d = rng.random_range(1..=3);
        let n_terms = rng.random_range(1..=4);
        let f = random_density(&mut rng, d, 4, n_terms);
        let c = random_cuboid(&mut rng, d, -5.0, 5.0);
        let axis = rng.random_range(0..d);
        let cut = rng.random_range(c.lo()[axis]..c.hi()[axis]);
        if cut <= c.lo()[axis] {
            continue;
        }
        let mut left_hi = c.hi().to_vec();
        left_hi[axis] = cut;
        let mut right_lo = c.lo().to_vec();
        right_lo[axis] = cut;
        let left = Cuboid::new(c.lo().to_vec(), left_hi).unwrap();
        let right = Cuboid::new(right_lo, c.hi().to_vec()).unwrap();
        let whole = poly_box_moment(&f, &c).unwrap();
        let parts = poly_box_moment(&f, &left).unwrap() + poly_box_moment(&f, &right).unwrap();
        let scale = abs_scale(&f, c.lo(), c.hi()).max(f64::MIN_POSITIVE);
        assert!((whole - parts).abs() <= 1e-12 * scale, "case {i}: {whole} vs {parts}");
    }
}

#[test]
fn closed_form_matches_both_oracles() {
    let tol = Tolerance::default();
    for i in 0..1000u64 {
        let mut rng = item_rng(12, i);
        let d = rng.random_range(1..=3);
        let n_terms = rng.random_range(1..=5);
        let f = random_density(&mut rng, d, 4, n_terms);
        let c = random_cuboid(&mut rng, d, -5.0, 5.0);
        let closed = poly_box_moment(&f, &c).unwrap();
        let scale = abs_scale(&f, c.lo(), c.hi()).max(f64::MIN_POSITIVE);
        let gk = oracle_moment(&f, Domain::Full, &Shape::Cuboid(c.clone()), &tol).unwrap();
        let gl = gl_box_moment(&f, c.lo(), c.hi());
        assert!((closed - gk).abs() <= 1e-9 * scale, "case {i}: {closed} vs {gk}");
        assert!((closed - gl).abs() <= 1e-12 * scale, "case {i}: {closed} vs {gl}");
    }
}

#[test]
fn orbit_moments_match_quadrature() {
    let tol = Tolerance {
        abs: 1e-14,
        rel: 1e-11,
        ..Tolerance::default()
    };
    for body in [BodyKind::Ball, BodyKind::Cube, BodyKind::CrossPolytope] {
        for i in 0..60u64 {
            let mut rng = item_rng(13, i);
            let d = rng.random_range(1..=3);
            let n_terms = rng.random_range(1..=3);
            let f = random_density(&mut rng, d, 3, n_terms);
            let scale = (0..d).map(|_| rng.random_range(-1.0f64..1.0).exp()).collect();
            let shift = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
            let t = AxisTransform::new(scale, shift).unwrap();
            let o = apply_transform(&t, SymmetricBody::new(body, d).unwrap()).unwrap();
            let closed = orbit_moment(&f, &o).unwrap();
            let quad = oracle_moment(&f, Domain::Full, &Shape::Orbit(o.clone()), &tol).unwrap();
            let bb = o.bounding_box();
            let s = abs_scale(&f, bb.lo(), bb.hi()).max(f64::MIN_POSITIVE);
            assert!((closed - quad).abs() <= 1e-9 * s, "{body:?} case {i}: {closed} vs {quad}");
        }
    }
}

#[test]
fn pulled_back_measures_match_quadrature() {
    let tol = Tolerance::default();
    for i in 0..200u64 {
        let mut rng = item_rng(14, i);
        let d = rng.random_range(1..=2);
        let n_terms = rng.random_range(1..=3);
        let f = random_density(&mut rng, d, 3, n_terms);
        let c = random_cuboid(&mut rng, d, -6.0, 6.0);
        let s = rng.random_range(0.5..2.0);
        let closed = pulledback_box_measure(&f, &c, s).unwrap();
        let quad = oracle_moment(&f, Domain::PulledBack { steepness: s }, &Shape::Cuboid(c.clone()), &tol).unwrap();
        let scale = f.terms().iter().map(|t| t.coeff.abs()).sum::<f64>();
        assert!((closed - quad).abs() <= 1e-9 * scale, "case {i}: {closed} vs {quad}");
    }
}

#[test]
fn marginals_integrate_to_the_moment() {
    for i in 0..2000u64 {
        let mut rng = item_rng(15, i);
        let d = rng.random_range(1..=3);
        let n_terms = rng.random_range(1..=4);
        let f = random_density(&mut rng, d, 4, n_terms);
        let c = random_cuboid(&mut rng, d, -3.0, 3.0);
        let axis = rng.random_range(0..d);
        let m = axis_marginal(&f, &c, axis).unwrap();
        let whole = poly_box_moment(&f, &c).unwrap();
        let scale = abs_scale(&f, c.lo(), c.hi()).max(f64::MIN_POSITIVE);
        assert!((m.total() - whole).abs() <= 1e-12 * scale);
        let gl = gl_box_moment(&m.density, &[m.lo], &[m.hi]);
        assert!((gl - whole).abs() <= 1e-12 * scale);
    }
}

fn arb_box(d: usize) -> impl Strategy<Value = Cuboid> {
    prop::collection::vec((-5.0f64..5.0, 0.01f64..4.0), d)
        .prop_map(|v| Cuboid::new(v.iter().map(|p| p.0).collect(), v.iter().map(|p| p.0 + p.1).collect()).unwrap())
}

proptest! {
    #[test]
    fn volume_scales_with_determinant(c in arb_box(3), s in prop::collection::vec(0.1f64..3.0, 3), b in prop::collection::vec(-3.0f64..3.0, 3)) {
        let one = PolyDensity::constant(3, 1.0);
        let t = AxisTransform::new(s.clone(), b.clone()).unwrap();
        let image = Cuboid::new(t.apply(c.lo()), t.apply(c.hi())).unwrap();
        let before = poly_box_moment(&one, &c).unwrap();
        let after = poly_box_moment(&one, &image).unwrap();
        prop_assert!((after - t.det() * before).abs() <= 1e-12 * after.abs());

        let moved = Cuboid::new(
            c.lo().iter().zip(&b).map(|(x, y)| x + y).collect(),
            c.hi().iter().zip(&b).map(|(x, y)| x + y).collect(),
        ).unwrap();
        let shifted = poly_box_moment(&one, &moved).unwrap();
        prop_assert!((shifted - before).abs() <= 1e-12 * before.abs());
    }

    #[test]
    fn odd_ball_moments_vanish(exps in prop::collection::vec(0u32..=8, 1..=4), axis in 0usize..4) {
        let mut exps = exps;
        let i = axis % exps.len();
        if exps[i] % 2 == 0 {
            exps[i] = (exps[i] + 1).min(7);
        }
        for body in [BodyKind::Ball, BodyKind::Cube, BodyKind::CrossPolytope] {
            prop_assert_eq!(monomial_body_moment(body, &exps), 0.0);
        }
    }
}
