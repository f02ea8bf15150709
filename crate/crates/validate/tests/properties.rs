use dseval_core::{IndexData, Value};
use dseval_validate::{aggregate_metrics, compare_values, Category, CompareOptions, EvalMode, SubCategory, Verdict};
use proptest::prelude::*;

fn scalar() -> impl Strategy<Value = Value> {
    prop_oneof![
        any::<i64>().prop_map(Value::int),
        (-1e6f64..1e6).prop_map(Value::float),
        Just(Value::float(f64::NAN)),
        "[a-z]{0,4}".prop_map(Value::str),
        any::<bool>().prop_map(|v| Value::Bool { v }),
        Just(Value::None),
    ]
}

fn value() -> impl Strategy<Value = Value> {
    scalar().prop_recursive(3, 24, 4, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..4).prop_map(Value::list),
            prop::collection::vec(inner, 0..4).prop_map(|items| Value::Tuple { items }),
            prop::collection::vec(-100i64..100, 0..5).prop_map(|v| Value::Series {
                name: Box::new(Value::str("s")),
                dtype: "int64".into(),
                index: IndexData::range(v.len()),
                values: v.into_iter().map(Value::int).collect(),
            }),
        ]
    })
}

fn options() -> impl Strategy<Value = CompareOptions> {
    (0.0f64..1e-3, 0.0f64..1e-3, any::<bool>(), any::<bool>(), any::<bool>()).prop_map(
        |(atol, rtol, ignore_order, ignore_index, ignore_names)| CompareOptions {
            atol,
            rtol,
            ignore_order,
            ignore_index,
            ignore_names,
        },
    )
}

fn frame_row() -> impl Strategy<Value = Value> {
    (-50i64..50, -10.0f64..10.0, "[a-c]{1,2}").prop_map(|(a, b, c)| Value::Frame {
        columns: vec![Value::str("a"), Value::str("b"), Value::str("c")],
        dtypes: vec!["int64".into(), "float64".into(), "object".into()],
        index: IndexData::range(1),
        data: vec![vec![Value::int(a)], vec![Value::float(b)], vec![Value::str(c)]],
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn compare_is_reflexive(v in value(), o in options()) {
        prop_assert!(compare_values(&v, &v, &o).matched);
    }

    #[test]
    fn compare_match_is_symmetric(a in value(), b in value(), o in options()) {
        prop_assert_eq!(compare_values(&a, &b, &o).matched, compare_values(&b, &a, &o).matched);
    }

    #[test]
    fn ignore_order_is_irrelevant_for_single_rows(a in frame_row(), b in frame_row(), o in options()) {
        let ordered = CompareOptions { ignore_order: false, ignore_index: true, ..o };
        let unordered = CompareOptions { ignore_order: true, ..ordered };
        prop_assert_eq!(compare_values(&a, &b, &ordered).matched, compare_values(&a, &b, &unordered).matched);
    }

    #[test]
    fn relaxed_rates_never_fall_below_pass_rate(picks in prop::collection::vec((0usize..32, any::<bool>()), 0..60)) {
        let leaves = dseval_validate::VerdictLabel::all_leaves();
        let verdicts: Vec<(EvalMode, Verdict)> = picks
            .iter()
            .map(|(i, correct)| {
                let v = if *correct {
                    Verdict::new(Category::Correct, None, "")
                } else {
                    Verdict { label: leaves[*i], detail: String::new() }
                };
                (EvalMode::Reset, v)
            })
            .collect();
        let m = aggregate_metrics(verdicts.iter().map(|(mode, v)| (*mode, v)));
        prop_assert!(m.pass_rate_wo_intact >= m.pass_rate);
        prop_assert!(m.pass_rate_wo_pe >= m.pass_rate);
        for r in [m.pass_rate, m.pass_rate_wo_intact, m.pass_rate_wo_pe] {
            prop_assert!((0.0..=100.0).contains(&r));
        }
        prop_assert_eq!(m.empty, picks.is_empty());
    }
}

#[test]
fn pe_subtypes_are_all_reachable_labels() {
    for s in [SubCategory::IndexMismatch, SubCategory::MissingReturn, SubCategory::PartialMatch, SubCategory::NonCode] {
        assert!(Category::PresentationError.subcategories().contains(&s));
    }
}
