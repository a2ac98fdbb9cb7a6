use proptest::prelude::*;
use rilab::grid::{
    compose_maps, compose_with_map, invert_map, is_measure_preserving, random_automorphism, random_dyadic_map,
    MeasureMap, StepFunction, DEFAULT_LEVEL_CAP,
};
use rilab::scalar::{rational, Rational};

fn rational_step(level: u32, values: &[i64]) -> StepFunction<Rational> {
    StepFunction::new(level, values.iter().map(|v| rational(*v, 3)).collect()).unwrap()
}

#[test]
fn map_text_round_trips() {
    for seed in 0..20 {
        let sigma = random_dyadic_map(4, 5, seed).unwrap();
        assert!(MeasureMap::from_text(&sigma.to_text()).unwrap().same_map(&sigma));
    }
}

proptest! {
    #[test]
    fn refining_then_averaging_is_the_identity(values in prop::collection::vec(-50i64..50, 8), extra in 0u32..4) {
        let f = rational_step(3, &values);
        let fine = f.refine(3 + extra).unwrap();
        prop_assert_eq!(fine.integral(), f.integral());
        prop_assert_eq!(fine.average_to(3).unwrap(), f);
    }

    #[test]
    fn maps_compose_with_their_inverse_to_the_identity(seed in 0u64..10_000, level in 2u32..5) {
        let sigma = random_dyadic_map(level + 1, 4, seed).unwrap();
        let inv = invert_map(&sigma);
        for m in [compose_maps(&sigma, &inv, DEFAULT_LEVEL_CAP).unwrap(), compose_maps(&inv, &sigma, DEFAULT_LEVEL_CAP).unwrap()] {
            prop_assert!(m.same_map(&MeasureMap::identity()));
        }
    }

    #[test]
    fn automorphisms_preserve_integrals(seed in 0u64..10_000, values in prop::collection::vec(-50i64..50, 8)) {
        let tau = random_automorphism(2, 4, seed).unwrap();
        prop_assert!(is_measure_preserving(&tau));
        let f = rational_step(3, &values);
        let g = compose_with_map(&f, &tau, DEFAULT_LEVEL_CAP).unwrap();
        prop_assert_eq!(g.integral(), f.integral());
    }

    #[test]
    fn composition_with_a_map_weights_integrals_by_the_derivative(seed in 0u64..10_000, values in prop::collection::vec(-50i64..50, 16)) {
        // ∫ f∘σ dλ = ∫ f w dλ, with w = |src_i| / |tgt_i| on each target
        let sigma = random_dyadic_map(3, 4, seed).unwrap();
        let f = rational_step(4, &values);
        let lhs = compose_with_map(&f, &sigma, DEFAULT_LEVEL_CAP).unwrap().integral();
        let mut rhs = rational(0, 1);
        for (piece, w) in sigma.pieces().iter().zip(sigma.weights()) {
            let ind = StepFunction::<Rational>::interval_indicator(&piece.tgt).unwrap();
            rhs += f.pairing(&ind) * w;
        }
        prop_assert_eq!(lhs, rhs);
    }
}
