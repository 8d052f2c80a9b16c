use plateau_core::geometry::{dist, PlaneDir, Polytope, SquashMap};
use proptest::prelude::*;

fn point() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1.0f64..1.0, 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn clipping_splits_measure(pts in proptest::collection::vec(point(), 3..8), a in 0.0f64..6.3, c in -0.5f64..0.5) {
        let Ok(p) = Polytope::hull(&pts) else { return Ok(()) };
        prop_assume!(p.dim() == 2);
        let n = [a.cos(), a.sin()];
        let lo = p.clip(&n, c).map_or(0.0, |q| q.measure());
        let hi = p.clip(&[-n[0], -n[1]], -c).map_or(0.0, |q| q.measure());
        prop_assert!((lo + hi - p.measure()).abs() <= 1e-9 * p.measure().max(1.0));
    }

    #[test]
    fn rotundity_is_inradius_over_circumradius(pts in proptest::collection::vec(point(), 3..8)) {
        let Ok(p) = Polytope::hull(&pts) else { return Ok(()) };
        prop_assume!(p.dim() == 2 && p.measure() > 1e-3);
        let r = p.rotundity().unwrap();
        prop_assert!(r > 0.0 && r <= 1.0);
        prop_assert!((r - p.inradius().unwrap() / p.circumradius()).abs() <= 1e-12);
        let (center, rad) = p.circumball();
        prop_assert!(p.vertices().iter().all(|v| dist(v, &center) <= rad * (1.0 + 1e-9)));
    }

    #[test]
    fn squash_map_respects_its_bound(eps in 0.1f64..0.4, delta in 0.1f64..0.4, z in point(), w in point()) {
        let tri = Polytope::hull(&[vec![-0.4, -0.05 * eps], vec![0.4, 0.0], vec![0.0, 0.05 * eps]]).unwrap();
        let plane = PlaneDir::new(vec![vec![1.0, 0.0]], 2).unwrap();
        let map = SquashMap::new(tri, vec![0.0, 0.0], 1.0, plane, eps, delta).unwrap();
        let d = dist(&z, &w);
        prop_assume!(d > 1e-9);
        prop_assert!(dist(&map.apply(&z), &map.apply(&w)) <= (3.0 + eps / delta) * d + 1e-9);
    }
}
