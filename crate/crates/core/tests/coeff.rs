use plateau_core::coeff::{CoeffGroup, GroupKind, NormSpec};
use proptest::prelude::*;

fn groups() -> Vec<CoeffGroup> {
    vec![
        CoeffGroup::integers(),
        CoeffGroup::z2(),
        CoeffGroup::mod_q(6).unwrap(),
        CoeffGroup::new(GroupKind::ModQ(7), NormSpec::Uniform(0.5)).unwrap(),
        CoeffGroup::new(GroupKind::Integers, NormSpec::Uniform(3.0)).unwrap(),
    ]
}

proptest! {
    #[test]
    fn norm_axioms(a in -1000i64..1000, b in -1000i64..1000) {
        for g in groups() {
            let s = g.add(a, b).unwrap();
            prop_assert!(g.norm_of(s) <= g.norm_of(a) + g.norm_of(b) + 1e-12);
            prop_assert_eq!(g.norm_of(g.neg(a)), g.norm_of(a));
            prop_assert_eq!(g.norm_of(a) == 0.0, g.canon(a) == 0);
            if g.canon(a) != 0 {
                prop_assert!(g.norm_of(a) >= g.min_positive_norm());
            }
        }
    }

    #[test]
    fn addition_is_a_group_law(a in -50i64..50, b in -50i64..50, c in -50i64..50) {
        for g in groups() {
            let l = g.add(g.add(a, b).unwrap(), c).unwrap();
            let r = g.add(a, g.add(b, c).unwrap()).unwrap();
            prop_assert_eq!(l, r);
            prop_assert_eq!(g.add(a, b).unwrap(), g.add(b, a).unwrap());
            prop_assert_eq!(g.add(a, g.neg(a)).unwrap(), 0);
        }
    }
}

#[test]
fn short_names_parse_back() {
    for g in [CoeffGroup::integers(), CoeffGroup::z2(), CoeffGroup::mod_q(9).unwrap()] {
        assert_eq!(CoeffGroup::parse_short(&g.short_name()).unwrap(), g);
    }
    assert!(CoeffGroup::mod_q(1).is_err());
}
