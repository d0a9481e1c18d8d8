use proptest::prelude::*;

use hadamard_ep::bifunctions::{example41, potential, PotentialSpec};
use hadamard_ep::geometry::{Manifold, ManifoldDescriptor, ManifoldPoint};
use hadamard_ep::sets::ConvexSet;
use hadamard_ep::solver::{resolvent, InnerMethod};
use hadamard_ep::vr::{inconvenience, worthwhile_payoff, Experience};

fn manifolds() -> Vec<Manifold> {
    vec![
        Manifold::euclidean(3),
        Manifold::hyperbolic(2),
        Manifold::new(ManifoldDescriptor::product(vec![
            ManifoldDescriptor::euclidean(1),
            ManifoldDescriptor::hyperbolic(1),
        ]))
        .unwrap(),
    ]
}

fn chart(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, dim)
}

fn r1(x: f64) -> ManifoldPoint {
    Manifold::euclidean(1).point(vec![x]).unwrap()
}

proptest! {
    #[test]
    fn exp_inverts_log(which in 0usize..3, a in chart(3), b in chart(3)) {
        let m = &manifolds()[which];
        let n = m.intrinsic_dim();
        let x = m.point_from_chart(&a[..n]).unwrap();
        let y = m.point_from_chart(&b[..n]).unwrap();
        let v = m.log(&x, &y).unwrap();
        let back = m.exp(&x, &v).unwrap();
        let err = back.coords().iter().zip(y.coords()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-9 * (1.0 + y.coords().iter().fold(0.0f64, |s, c| s.max(c.abs()))));
        prop_assert!((v.norm() - x.distance(&y)).abs() <= 1e-9);
    }

    #[test]
    fn distance_is_a_metric(which in 0usize..3, a in chart(3), b in chart(3), c in chart(3)) {
        let m = &manifolds()[which];
        let n = m.intrinsic_dim();
        let x = m.point_from_chart(&a[..n]).unwrap();
        let y = m.point_from_chart(&b[..n]).unwrap();
        let z = m.point_from_chart(&c[..n]).unwrap();
        prop_assert!((x.distance(&y) - y.distance(&x)).abs() <= 1e-12);
        prop_assert!(x.distance(&x) <= 1e-12);
        prop_assert!(x.distance(&z) <= x.distance(&y) + y.distance(&z) + 1e-9);
    }

    #[test]
    fn comparison_slacks_have_the_hadamard_sign(which in 0usize..3, a in chart(3), b in chart(3), c in chart(3)) {
        let m = &manifolds()[which];
        let n = m.intrinsic_dim();
        let x = m.point_from_chart(&a[..n]).unwrap();
        let y = m.point_from_chart(&b[..n]).unwrap();
        let z = m.point_from_chart(&c[..n]).unwrap();
        if let Ok(s) = m.comparison_slacks(&x, &y, &z) {
            prop_assert!(s.triangle <= 1e-9);
            prop_assert!(s.pair >= -1e-9);
        }
    }

    #[test]
    fn ball_projection_is_idempotent_and_nonexpansive(c in chart(2), a in chart(2), b in chart(2), r in 0.1..1.5f64) {
        let m = Manifold::hyperbolic(2);
        let ball = ConvexSet::ball(m.point_from_chart(&c).unwrap(), r).unwrap();
        let x = m.point_from_chart(&a).unwrap();
        let y = m.point_from_chart(&b).unwrap();
        let px = ball.project(&x).unwrap();
        let py = ball.project(&y).unwrap();
        prop_assert!(ball.contains(&px).unwrap());
        prop_assert!(ball.project(&px).unwrap().distance(&px) <= 1e-9);
        prop_assert!(px.distance(&py) <= x.distance(&y) + 1e-9);
    }

    #[test]
    fn box_projection_is_nearest_on_segment(a in chart(2), b in chart(2), t in 0.0..1.0f64) {
        let s = ConvexSet::boxed(vec![-0.5, 0.0], vec![1.0, 0.75]).unwrap();
        let m = s.manifold().clone();
        let x = m.point(a.clone()).unwrap();
        let p = s.project(&x).unwrap();
        let q = s.project(&m.point(b).unwrap()).unwrap();
        // points between two members stay in the set and are no closer to x
        let w = p.geodesic_to(&q, t);
        prop_assert!(s.contains(&w).unwrap());
        prop_assert!(x.distance(&w) >= x.distance(&p) - 1e-12);
    }

    #[test]
    fn regularized_example41_is_monotone(lambda in 1.0..20.0f64, z in 0.5..1.0f64, x in 0.5..1.0f64, y in 0.5..1.0f64) {
        let fr = example41().regularize(lambda, &r1(z)).unwrap();
        let (x, y) = (r1(x), r1(y));
        prop_assert!(fr.eval(&x, &y) + fr.eval(&y, &x) <= 1e-12);
    }

    #[test]
    fn example41_resolvent_fixes_only_the_equilibrium(lambda in 1.1..20.0f64, x in 0.5..1.0f64) {
        let z = resolvent(&example41(), lambda, &r1(x), &InnerMethod::ClosedForm).unwrap().point;
        let zc = z.coords()[0];
        prop_assert!((0.5..=1.0).contains(&zc));
        prop_assert!(zc >= x);
        if x < 1.0 {
            prop_assert!(zc > x);
        }
    }

    #[test]
    fn potential_resolvent_matches_scalar_argmin(lambda in 0.5..10.0f64, x in -1.0..1.0f64, c in -0.9..0.9f64) {
        // phi(y) = (y - c)^2 on [-1, 1]; argmin of phi + (lambda/2)(y - x)^2
        let dom = ConvexSet::interval(-1.0, 1.0).unwrap();
        let f = potential(PotentialSpec::Polynomial { coeffs: vec![c * c, -2.0 * c, 1.0] }, dom).unwrap();
        let z = resolvent(&f, lambda, &r1(x), &InnerMethod::ClosedForm).unwrap().point.coords()[0];
        let expect = ((2.0 * c + lambda * x) / (2.0 + lambda)).clamp(-1.0, 1.0);
        prop_assert!((z - expect).abs() <= 1e-12);
    }

    #[test]
    fn worthwhile_payoff_grows_as_lambda_shrinks_where_inconvenient(
        past in 0.5..1.0f64, cur in 0.5..1.0f64, y in 0.5..1.0f64, l1 in 0.0..10.0f64, l2 in 0.0..10.0f64,
    ) {
        let a = example41().negated();
        let e = Experience::new(r1(past), r1(cur)).unwrap();
        let y = r1(y);
        prop_assume!(inconvenience(&e, &y) >= 0.0);
        let (lo, hi) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
        prop_assert!(worthwhile_payoff(&a, lo, &e, &y) >= worthwhile_payoff(&a, hi, &e, &y) - 1e-15);
    }

    #[test]
    fn staying_costs_nothing(past in 0.5..1.0f64, cur in 0.5..1.0f64, lambda in 0.0..10.0f64) {
        let a = example41().negated();
        let e = Experience::new(r1(past), r1(cur)).unwrap();
        prop_assert_eq!(worthwhile_payoff(&a, lambda, &e, &r1(cur)), 0.0);
    }
}
