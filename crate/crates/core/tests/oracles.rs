use proptest::prelude::*;
use treeprod::testgen::{oracle_power_membership, oracle_proper_power};
use treeprod::words::{free_reduce, is_proper_power, power_membership, Letter, Word};

fn arb_word(max: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec((0u32..3, any::<bool>()).prop_map(|(g, i)| Letter::new(g, i)), 0..max)
        .prop_map(|ls| free_reduce(&ls))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn power_membership_matches_oracle(w in arb_word(20), base in arb_word(5), k in -4i64..5, use_power in any::<bool>()) {
        prop_assume!(!base.is_empty());
        let p = is_proper_power(&base).unwrap().root;
        let w = if use_power { free_reduce(p.pow(k).letters()) } else { w };
        prop_assert_eq!(power_membership(&w, &p).unwrap(), oracle_power_membership(&w, &p));
    }

    #[test]
    fn proper_power_matches_oracle(u in arb_word(5), k in 1i64..4) {
        prop_assume!(!u.is_empty());
        let w = free_reduce(u.pow(k).letters());
        prop_assume!(!w.is_empty());
        let found = is_proper_power(&w).unwrap();
        prop_assert_eq!(found.k, oracle_proper_power(&w));
        prop_assert_eq!(free_reduce(found.root.pow(found.k).letters()), w);
    }
}
