use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use zoslice::{esjd, round_cost, DirectionLaw, Trajectory, TrajectoryMeta};

fn law() -> impl Strategy<Value = DirectionLaw> {
    prop_oneof![Just(DirectionLaw::UniformStiefel), Just(DirectionLaw::CanonicalSubset)]
}

fn dims() -> impl Strategy<Value = (usize, usize)> {
    (1usize..40).prop_flat_map(|d| (Just(d), 1..=d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn frames_are_orthonormal(law in law(), (d, m) in dims(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = law.sample(&mut rng, d, m).unwrap();
        prop_assert_eq!(v.dim(), d);
        prop_assert_eq!(v.count(), m);
        prop_assert!(v.orthonormality_error() <= 1e-10);
    }

    #[test]
    fn slice_update_round_trips(
        law in law(),
        (d, m) in dims(),
        seed in any::<u64>(),
        x in prop::collection::vec(-10.0f64..10.0, 40),
        s in prop::collection::vec(-10.0f64..10.0, 40),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = law.sample(&mut rng, d, m).unwrap();
        let moved = v.slice_update(&x[..d], &s[..m]).unwrap();
        for (a, b) in v.project(&moved).unwrap().iter().zip(&s[..m]) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
        // the orthogonal complement is untouched
        let back = v.slice_update(&moved, &v.project(&x[..d]).unwrap()).unwrap();
        for (a, b) in back.iter().zip(&x[..d]) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn esjd_is_nonnegative_and_translation_invariant(
        rows in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 2..50),
        shift in prop::collection::vec(-100.0f64..100.0, 3),
    ) {
        let meta = TrajectoryMeta { kernel: "prop".into(), directions: 1, leapfrog_steps: 1, law: None };
        let base = esjd(&Trajectory::from_states(3, &rows, meta.clone()).unwrap()).unwrap();
        prop_assert!(base >= 0.0);
        let moved: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().zip(&shift).map(|(a, c)| a + c).collect()).collect();
        let other = esjd(&Trajectory::from_states(3, &moved, meta).unwrap()).unwrap();
        prop_assert!((other - base).abs() <= 1e-9 * (1.0 + base));
    }

    #[test]
    fn round_cost_is_monotone(l in 1usize..20, m in 1usize..300, m0 in 1usize..100) {
        let c = round_cost(l, m, m0).unwrap();
        prop_assert!(c >= l as f64);
        prop_assert!(round_cost(l, m + 1, m0).unwrap() >= c);
        prop_assert!(round_cost(l + 1, m, m0).unwrap() > c);
        prop_assert_eq!(round_cost(l, m0, m0).unwrap(), l as f64);
    }
}
