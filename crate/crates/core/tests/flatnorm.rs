use plateau_core::chain::Chain;
use plateau_core::coeff::CoeffGroup;
use plateau_core::complex::{CellComplex, GridSpec};
use plateau_core::flatnorm::{flat_norm, FlatNormOptions};
use proptest::prelude::*;

fn grid() -> CellComplex {
    CellComplex::dyadic_grid(&GridSpec::unit(2, 2)).unwrap()
}

fn cycle(g: CoeffGroup, k: &CellComplex, faces: &[usize]) -> (Chain, Chain) {
    let r = Chain::from_terms(g, 2, faces.iter().map(|&f| (f, 1))).unwrap();
    (r.boundary(k).unwrap(), r)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn flat_norm_is_bounded_by_both_decompositions(faces in proptest::collection::btree_set(0usize..16, 1..8), z2 in any::<bool>()) {
        let k = grid();
        let g = if z2 { CoeffGroup::z2() } else { CoeffGroup::integers() };
        let faces: Vec<usize> = faces.into_iter().collect();
        let (t, r) = cycle(g, &k, &faces);
        let f = flat_norm(&k, &t, &FlatNormOptions::default()).unwrap();
        prop_assert!(f.value <= t.mass(&k) + 1e-12);
        prop_assert!(f.value <= r.mass(&k) + 1e-12);
        let q = &f.witness_q;
        prop_assert_eq!(q.add(&f.witness_r.boundary(&k).unwrap()).unwrap(), t);
        prop_assert!((q.mass(&k) + f.witness_r.mass(&k) - f.value).abs() <= 1e-12);
    }

    #[test]
    fn flat_norm_is_subadditive(a in proptest::collection::btree_set(0usize..16, 1..5), b in proptest::collection::btree_set(0usize..16, 1..5)) {
        let k = grid();
        let g = CoeffGroup::z2();
        let (ta, _) = cycle(g, &k, &a.into_iter().collect::<Vec<_>>());
        let (tb, _) = cycle(g, &k, &b.into_iter().collect::<Vec<_>>());
        let o = FlatNormOptions::default();
        let sum = flat_norm(&k, &ta.add(&tb).unwrap(), &o).unwrap().value;
        prop_assert!(sum <= flat_norm(&k, &ta, &o).unwrap().value + flat_norm(&k, &tb, &o).unwrap().value + 1e-12);
    }
}
