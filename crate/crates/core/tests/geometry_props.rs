use fredholm::gallery;
use fredholm::geometry::SeamManifold;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn band() -> SeamManifold {
    gallery::load("taut_s").manifold().clone()
}

fn point_in(m: &SeamManifold) -> impl Strategy<Value = Vec<f64>> {
    m.bounds().iter().map(|&(lo, hi)| lo..hi).collect::<Vec<_>>()
}

proptest! {
    #[test]
    fn round_trip_transition_is_identity(
        (x, y) in { let m = band(); (point_in(&m), point_in(&m)) }
    ) {
        let m = band();
        let there = m.connect(&x, &y);
        let back = m.connect(&y, &x);
        let acc = back.accumulated_transition(&m) * there.accumulated_transition(&m);
        let id = DMatrix::<f64>::identity(m.dim(), m.dim());
        prop_assert!((acc - id).amax() < 1e-12);
    }

    #[test]
    fn loop_transition_sign_survives_basepoint_change(q in point_in(&band())) {
        let m = band();
        let lp = &m.generator_loops()[0];
        let p0 = lp.start().unwrap().to_vec();
        let shifted = m.connect(&q, &p0).then(lp).then(&m.connect(&p0, &q));
        let a = lp.accumulated_transition(&m).determinant();
        let b = shifted.accumulated_transition(&m).determinant();
        prop_assert_eq!(a.signum(), b.signum());
        prop_assert!(a < 0.0);
    }
}
