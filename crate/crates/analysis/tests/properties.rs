use dseval_analysis::score_difficulty;
use proptest::prelude::*;

fn expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        "[a-e]".prop_map(|s| s),
        (0i32..100).prop_map(|n| n.to_string()),
    ];
    leaf.prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            inner.clone().prop_map(|a| format!("f({a})")),
            (inner.clone(), inner.clone(), inner.clone()).prop_map(|(a, b, c)| format!("({a} if {b} else {c})")),
            inner.clone().prop_map(|a| format!("[x for x in {a}]")),
            inner.clone().prop_map(|a| format!("{a}[0]")),
        ]
    })
}

fn statement() -> impl Strategy<Value = String> {
    prop_oneof![
        expr().prop_map(|e| format!("y = {e}")),
        expr(),
        (expr(), expr()).prop_map(|(a, b)| format!("if {a}:\n    z = {b}")),
        (expr(), expr()).prop_map(|(a, b)| format!("for i in {a}:\n    w = {b}")),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn difficulty_is_additive(a in statement(), b in statement()) {
        let sa = score_difficulty(&a).unwrap();
        let sb = score_difficulty(&b).unwrap();
        let joined = score_difficulty(&format!("{a}\n{b}")).unwrap();
        prop_assert_eq!(joined, sa + sb);
        prop_assert_eq!(joined.total, joined.calls + joined.expressions + joined.conditions + joined.loops);
    }

    #[test]
    fn another_call_increases_total(a in statement()) {
        let before = score_difficulty(&a).unwrap().total;
        let after = score_difficulty(&format!("{a}\ng()")).unwrap().total;
        prop_assert!(after > before);
    }
}
