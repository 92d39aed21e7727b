use elliptic_gt::combinatorics::{dynamical_shift_closed, dynamical_shift_sum, enumerate_partitions, leq, sigma0_relabel};
use elliptic_gt::linalg::scalar_residual;
use elliptic_gt::rmatrix::{check_dybe, check_ice_rule, check_unitarity, flip, rbar};
use elliptic_gt::verify::VerifyConfig;
use elliptic_gt::{Complex64, DynamicalState, EllipticParams, Lambda, PartitionIndex, SuiteRegistry};
use proptest::prelude::*;

fn params(rank: usize) -> EllipticParams {
    EllipticParams::real(0.5, 3.0, rank).unwrap()
}

fn complex() -> impl Strategy<Value = Complex64> {
    (-0.6..0.6f64, -0.3..0.3f64).prop_map(|(re, im)| Complex64::new(re, im))
}

fn state(rank: usize) -> impl Strategy<Value = DynamicalState> {
    prop::collection::vec(complex(), rank).prop_map(DynamicalState::new)
}

fn word(rank: usize, max_len: usize) -> impl Strategy<Value = PartitionIndex> {
    prop::collection::vec(1..=rank as u8, 1..=max_len).prop_map(move |w| PartitionIndex::from_word(rank, &w).unwrap())
}

/// Two words with the same colour content.
fn same_shape_pair(rank: usize, max_len: usize) -> impl Strategy<Value = (PartitionIndex, PartitionIndex)> {
    word(rank, max_len).prop_flat_map(|a| {
        let w = a.word().to_vec();
        let rank = a.rank();
        Just(w).prop_shuffle().prop_map(move |b| (a.clone(), PartitionIndex::from_word(rank, &b).unwrap()))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bracket_is_odd_and_antiperiodic(u in complex()) {
        let p = params(2);
        prop_assert!(scalar_residual(p.bracket(-u), -p.bracket(u)) < 1e-10);
        prop_assert!(scalar_residual(p.bracket(u + p.r()), -p.bracket(u)) < 1e-10);
    }

    #[test]
    fn rbar_conserves_weight_and_is_unitary(u in complex(), s in state(3)) {
        let p = params(3);
        let m = rbar(u, &s, &p).unwrap();
        prop_assert!(check_ice_rule(&m).is_ok());
        prop_assert!(check_unitarity(u, &s, &p).unwrap().rbar < 1e-8);
    }

    #[test]
    fn rbar_at_zero_is_the_flip(s in state(2)) {
        let m = rbar(Complex64::new(0.0, 0.0), &s, &params(2)).unwrap();
        prop_assert_eq!(m.entries, flip(2));
    }

    #[test]
    fn dynamical_yang_baxter(u in prop::array::uniform3(complex()), s in state(2)) {
        prop_assert!(check_dybe(u, &s, &params(2)).unwrap() < 1e-8);
    }

    #[test]
    fn shift_sum_matches_closed_form(part in word(3, 7)) {
        for l in 1..3 {
            for s in (1..=part.n()).filter(|&s| part.color(s) <= l) {
                prop_assert_eq!(dynamical_shift_sum(&part, s, l).unwrap(), dynamical_shift_closed(&part, s, l).unwrap());
            }
        }
    }

    #[test]
    fn relabeling_identities_hold(part in word(3, 7)) {
        let rel = sigma0_relabel(&part);
        prop_assert!(rel.index_maps_hold() && rel.phi_relation_holds());
    }

    #[test]
    fn order_is_antisymmetric((a, b) in same_shape_pair(3, 6)) {
        prop_assert!(leq(&a, &a).unwrap());
        if leq(&a, &b).unwrap() && leq(&b, &a).unwrap() {
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn minimal_and_maximal_bound_the_order(part in word(3, 6)) {
        let lambda = part.lambda();
        prop_assert!(leq(&PartitionIndex::minimal(&lambda), &part).unwrap());
        prop_assert!(leq(&part, &PartitionIndex::maximal(&lambda)).unwrap());
    }

    #[test]
    fn swap_is_an_involution(part in word(3, 6), i in 1usize..6) {
        prop_assume!(i < part.n());
        prop_assert_eq!(part.swapped(i).swapped(i), part);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn order_is_transitive(parts in prop::collection::vec(0usize..2, 3), idx in prop::array::uniform3(0usize..1680)) {
        let lambda = Lambda::new(parts.iter().map(|p| p + 1).collect()).unwrap();
        let all = enumerate_partitions(&lambda).unwrap();
        let (a, b, c) = (&all[idx[0] % all.len()], &all[idx[1] % all.len()], &all[idx[2] % all.len()]);
        if leq(a, b).unwrap() && leq(b, c).unwrap() {
            prop_assert!(leq(a, c).unwrap());
        }
    }

    #[test]
    fn reports_depend_only_on_the_seed(seed in 0u64..1000) {
        let cfg = VerifyConfig { seed, samples: 4, ..VerifyConfig::default() };
        let registry = SuiteRegistry::standard();
        let a = serde_json::to_string(&registry.run("rmatrix", &cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&registry.run("rmatrix", &cfg).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }
}
