use dseval_annotator::select_examples;
use proptest::prelude::*;

proptest! {
    #[test]
    fn selection_is_bounded_distinct_and_seeded(len in 0usize..40, cap in 0usize..8, seed in any::<u64>()) {
        let picked = select_examples(len, cap, seed);
        prop_assert_eq!(picked.len(), len.min(cap));
        prop_assert!(picked.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(picked.iter().all(|&i| i < len));
        prop_assert_eq!(picked, select_examples(len, cap, seed));
    }
}
