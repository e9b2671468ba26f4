use proptest::prelude::*;

use tateforge::algebra::Element;
use tateforge::margolis::{margolis_homology, AlgebraModule};
use tateforge::steenrod::{
    algebra_catalog, is_coassociative_on, q_action, q_degree, q_matrix, sigma, SpaceId,
};

const CAP: usize = 18;

fn space() -> impl Strategy<Value = SpaceId> {
    prop_oneof![
        Just(SpaceId::DualSteenrod),
        Just(SpaceId::HZ),
        (1u32..=3).prop_map(SpaceId::Y),
        (1u32..=3).prop_map(SpaceId::Z),
        (1u32..=3).prop_map(SpaceId::ZmodVn),
        (1u32..=3).prop_map(SpaceId::ThhY),
        Just(SpaceId::ThhHF2),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn q_squares_to_zero(id in space(), m in 0u32..4, d in 0usize..=CAP) {
        let c = algebra_catalog(id, CAP).unwrap();
        let b = c.basis().unwrap();
        let q = q_degree(m);
        prop_assume!(d >= 2 * q);
        let p = q_matrix(&c, &b, m, d - q).unwrap().mul(&q_matrix(&c, &b, m, d).unwrap()).unwrap();
        prop_assert!(p.is_zero());
    }

    #[test]
    fn coaction_is_coassociative(id in space(), d in 0usize..=CAP, pick in any::<prop::sample::Index>()) {
        let c = algebra_catalog(id, CAP).unwrap();
        let b = c.basis().unwrap();
        let basis = b.basis(d);
        prop_assume!(!basis.is_empty());
        prop_assert!(is_coassociative_on(&c, &basis[pick.index(basis.len())]));
    }

    #[test]
    fn q_and_sigma_commute_on_thh(n in 1u32..=3, m in 0u32..4, d in 0usize..CAP, pick in any::<prop::sample::Index>()) {
        let c = algebra_catalog(SpaceId::ThhY(n), CAP).unwrap();
        let b = c.basis().unwrap();
        let basis = b.basis(d);
        prop_assume!(!basis.is_empty());
        let x = Element::from_monomial(basis[pick.index(basis.len())].clone());
        let a = sigma(&c, &q_action(&c, m, &x)).unwrap();
        let s = q_action(&c, m, &sigma(&c, &x).unwrap());
        prop_assert_eq!(a, s);
    }

    #[test]
    fn margolis_bounded_by_module(id in space(), m in 0u32..4) {
        let c = algebra_catalog(id, CAP).unwrap();
        let module = AlgebraModule::new(c).unwrap();
        let dims = module.basis.dims();
        let t = margolis_homology(&module, m).unwrap();
        for (h, full) in t.dims.iter().zip(&dims) {
            prop_assert!(h <= full);
        }
    }
}
