use matdense::cpmaps::{choi_of, is_completely_positive, kraus_decomposition, map_from_choi, map_from_kraus};
use matdense::duality::Functional;
use matdense::presheaf::{cpmap_to_state, pair_decode, pair_encode, state_to_cpmap};
use matdense::{sample, Algebra, SuperOperator};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn shape() -> impl Strategy<Value = Algebra> {
    prop::collection::vec(1usize..=2, 1..=2).prop_map(|b| Algebra::new(&b).unwrap())
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn jordan_parts_are_positive_and_orthogonal(a in shape(), seed in any::<u64>()) {
        let x = sample::hermitian_element(&mut rng(seed), &a);
        let (plus, minus) = x.positive_decomposition(1e-9).unwrap();
        prop_assert!(plus.is_positive(1e-9) && minus.is_positive(1e-9));
        prop_assert!(plus.sub(&minus).unwrap().max_abs_diff(&x).unwrap() <= 1e-10 * (1.0 + x.max_abs()));
        prop_assert!(plus.mul(&minus).unwrap().max_abs() <= 1e-9 * (1.0 + x.norm()).powi(2));
    }

    #[test]
    fn choi_round_trip(m in 1usize..=3, n in 1usize..=3, seed in any::<u64>()) {
        let f = sample::linear_map(&mut rng(seed), &Algebra::matrix(m), &Algebra::matrix(n));
        let back = map_from_choi(&choi_of(&f).unwrap(), m, n).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn kraus_round_trip(a in shape(), b in shape(), k in 1usize..=3, seed in any::<u64>()) {
        let f = sample::cp_map(&mut rng(seed), &a, &b, k);
        prop_assert!(is_completely_positive(&f, 1e-9).completely_positive);
        let ops = kraus_decomposition(&f, 1e-9).unwrap();
        let back = map_from_kraus(&a, &b, &ops).unwrap();
        prop_assert!(back.distance(&f).unwrap() <= 1e-9 * (1.0 + f.max_abs()));
    }

    #[test]
    fn amplification_preserves_complete_positivity(a in shape(), b in shape(), n in 1usize..=2, seed in any::<u64>()) {
        let f = sample::cp_map(&mut rng(seed), &a, &b, 2);
        prop_assert!(is_completely_positive(&f.amplify(n).unwrap(), 1e-9).completely_positive);
    }

    #[test]
    fn dual_is_trace_adjoint(a in shape(), b in shape(), seed in any::<u64>()) {
        let mut r = rng(seed);
        let f = sample::linear_map(&mut r, &a, &b);
        let x = sample::element(&mut r, &a);
        let rho = sample::element(&mut r, &b);
        // tr(ρ f(x)) = tr(f†(ρ) x)
        let lhs = Functional::from_density(rho.clone()).eval(&f.apply(&x).unwrap()).unwrap();
        let rhs = Functional::from_density(f.dual().apply(&rho).unwrap()).eval(&x).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + lhs.norm()));
    }

    #[test]
    fn state_correspondence_round_trip(a in shape(), n in 1usize..=3, seed in any::<u64>()) {
        let f = sample::cp_map(&mut rng(seed), &a, &Algebra::matrix(n), 2);
        let s = cpmap_to_state(&f, 1e-9).unwrap();
        let back = state_to_cpmap(&s, &a, n, 1e-9).unwrap();
        prop_assert!(back.distance(&f).unwrap() <= 1e-10 * (1.0 + f.max_abs()));
    }

    #[test]
    fn pair_encoding_round_trip(a in shape(), n in 1usize..=2, seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = Algebra::matrix(n);
        let (f, g) = (sample::cp_map(&mut r, &a, &m, 1), sample::cp_map(&mut r, &a, &m, 2));
        let (f2, g2) = pair_decode(&pair_encode(&f, &g, 1e-9).unwrap(), 1e-9).unwrap();
        prop_assert_eq!(f2, f);
        prop_assert_eq!(g2, g);
    }

    #[test]
    fn composition_is_associative(a in shape(), b in shape(), c in shape(), seed in any::<u64>()) {
        let mut r = rng(seed);
        let f = sample::linear_map(&mut r, &a, &b);
        let g = sample::linear_map(&mut r, &b, &c);
        let h = sample::linear_map(&mut r, &c, &a);
        let lhs = h.compose(&g.compose(&f).unwrap()).unwrap();
        let rhs = h.compose(&g).unwrap().compose(&f).unwrap();
        prop_assert!(lhs.distance(&rhs).unwrap() <= 1e-10 * (1.0 + lhs.max_abs()));
        let id = SuperOperator::identity(&a);
        prop_assert_eq!(f.compose(&id).unwrap(), f);
    }
}
