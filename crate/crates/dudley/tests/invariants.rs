use dudley::flow;
use dudley::levy::{LevyMeasure, LevySpec};
use proptest::prelude::*;

fn spec_strategy() -> impl Strategy<Value = LevySpec> {
    (2usize..5, 0.0f64..1.5, prop::collection::vec((0.05f64..3.0, 0.1f64..2.0), 0..3))
        .prop_filter("nontrivial", |(_, s, a)| *s > 0.05 || !a.is_empty())
        .prop_map(|(d, sigma, atoms)| {
            let nu = if atoms.is_empty() { LevyMeasure::Zero } else { LevyMeasure::Atomic(atoms) };
            LevySpec::new(d, sigma, nu).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn proper_time_and_causality(spec in spec_strategy(), seed in any::<u64>()) {
        let p = flow::simulate_path(&spec, 3.0, 1e-2, seed).unwrap();
        for i in 0..p.len() {
            let v = p.velocity(i);
            prop_assert!((v.square() - 1.0).abs() <= 1e-8 * v.euclid_norm_sq().max(1.0));
            prop_assert!(p.g(i).constraint_residual() <= 1e-8);
        }
        for i in 1..p.len() {
            let dx = &p.xi(i) - &p.xi(i - 1);
            prop_assert!(p.times()[i] >= p.times()[i - 1]);
            prop_assert!(dx.time() >= 0.0 && dx.square() >= -1e-10 * dx.euclid_norm_sq());
        }
    }

    #[test]
    fn prefix_consistent_in_horizon(spec in spec_strategy(), seed in any::<u64>()) {
        let long = flow::simulate_path(&spec, 4.0, 1e-2, seed).unwrap();
        let short = flow::simulate_path(&spec, 2.0, 1e-2, seed).unwrap();
        let i = short.len() - 1;
        prop_assert_eq!(long.times()[i], short.times()[i]);
        prop_assert_eq!(long.u(i), short.u(i));
        prop_assert_eq!(long.b(i), short.b(i));
    }
}
