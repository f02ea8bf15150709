use std::time::Instant;

use dseval_core::{parse_str, ExecutionConfig, Value};
use dseval_runtime::{
    build_ground_truth, describe_variables, CallOutcome, DescribeStyle, ErrorKind, ScoreOutcome, Session,
    SessionConfig, SnapshotPolicy,
};

fn session() -> Session {
    Session::start(SessionConfig::default()).expect("python worker starts")
}

fn no_limits() -> ExecutionConfig {
    ExecutionConfig::default()
}

#[test]
fn one_plus_one() {
    let mut s = session();
    let r = s.execute("1 + 1", &no_limits()).unwrap();
    assert_eq!(r.execute_result.unwrap().value, Value::int(2));
    assert_eq!(r.stream_output, "");
    assert!(r.error.is_none());
    assert_eq!(s.execution_count(), 1);
}

#[test]
fn print_goes_to_stream_and_none_is_absent() {
    let mut s = session();
    let r = s.execute("print('hello')", &no_limits()).unwrap();
    assert!(r.execute_result.is_none());
    assert_eq!(r.stream_output, "hello\n");
    assert_eq!(s.console_log(), "hello\n");
}

#[test]
fn sleeping_past_limit_times_out_and_rolls_back() {
    let mut s = session();
    s.execute("x = 1", &no_limits()).unwrap();
    let cfg = ExecutionConfig {
        forbid_names: vec![],
        max_time: Some(0.5),
    };
    let started = Instant::now();
    let r = s.execute("x = 2\nimport time\ntime.sleep(1)", &cfg).unwrap();
    assert_eq!(r.error_kind(), Some(ErrorKind::Timeout));
    assert!(started.elapsed().as_secs_f64() < 1.0);
    assert_eq!(s.execution_count(), 1);
    let x = s.execute("x", &no_limits()).unwrap();
    assert_eq!(x.execute_result.unwrap().value, Value::int(1));
}

#[test]
fn c_level_block_hits_hard_deadline() {
    let mut s = session();
    s.execute("y = 5", &no_limits()).unwrap();
    let cfg = ExecutionConfig {
        forbid_names: vec![],
        max_time: Some(0.3),
    };
    // `signal.pause` swallows the alarm handler only after it returns; a
    // blocked lock acquire never yields to the handler.
    let started = Instant::now();
    let r = s
        .execute("import threading\nl = threading.Lock()\nl.acquire()\nl.acquire()", &cfg)
        .unwrap();
    assert_eq!(r.error_kind(), Some(ErrorKind::Timeout));
    assert!(started.elapsed().as_secs_f64() < 0.3 + 0.5);
    let y = s.execute("y", &no_limits()).unwrap();
    assert_eq!(y.execute_result.unwrap().value, Value::int(5));
}

#[test]
fn forbidden_name_refused_without_side_effects() {
    let mut s = session();
    s.execute("pop_heldout_test = 3", &no_limits()).unwrap();
    let cfg = ExecutionConfig {
        forbid_names: vec!["pop_heldout_test".into()],
        max_time: None,
    };
    let r = s.execute("leak = pop_heldout_test * 2", &cfg).unwrap();
    assert_eq!(r.error_kind(), Some(ErrorKind::ForbiddenName));
    assert_eq!(s.execution_count(), 1);
    assert!(!s.variable_names().unwrap().contains("leak"));
}

#[test]
fn error_kinds_are_classified() {
    let mut s = session();
    let cases = [
        ("from stats import chi2_contingency", ErrorKind::ModuleNotFound),
        ("import math\nmath.nope", ErrorKind::Attribute),
        ("{}['a']", ErrorKind::Key),
        ("undefined_thing", ErrorKind::Name),
        ("'a' > 1", ErrorKind::Type),
        ("int('x')", ErrorKind::Value),
        ("x = (", ErrorKind::Syntax),
        ("1/0", ErrorKind::Other),
    ];
    for (code, kind) in cases {
        let r = s.execute(code, &no_limits()).unwrap();
        assert_eq!(r.error_kind(), Some(kind), "{code}");
        assert!(r.execute_result.is_none());
    }
}

#[test]
fn snapshot_restore_undoes_mutation() {
    let mut s = session();
    s.execute("import pandas as pd\nt = pd.DataFrame({'a': [1, 2, 3]})\nalias = t", &no_limits())
        .unwrap();
    let snap = s.snapshot().unwrap();
    let before = s.view(Some(&["t".to_string()])).unwrap();
    s.execute("t['a'] = t['a'] * 10\nt['b'] = 1", &no_limits()).unwrap();
    assert_ne!(s.view(Some(&["t".to_string()])).unwrap(), before);
    s.restore(&snap).unwrap();
    assert_eq!(s.view(Some(&["t".to_string()])).unwrap(), before);
    assert_eq!(s.execution_count(), snap.created_at_execution_count());
    // Aliasing survives the round trip.
    let r = s.execute("alias is t", &no_limits()).unwrap();
    assert_eq!(r.execute_result.unwrap().value, Value::Bool { v: true });
}

#[test]
fn empty_snapshot_restores_empty_namespace() {
    let mut s = session();
    let snap = s.snapshot().unwrap();
    s.execute("z = 1", &no_limits()).unwrap();
    s.restore(&snap).unwrap();
    assert!(s.variable_names().unwrap().is_empty());
}

#[test]
fn restored_functions_see_live_globals() {
    let mut s = session();
    s.execute("k = 2\ndef f(x):\n    return x * k", &no_limits()).unwrap();
    let snap = s.snapshot().unwrap();
    let mut other = session();
    other.restore(&snap).unwrap();
    other.execute("k = 10", &no_limits()).unwrap();
    let r = other.execute("f(3)", &no_limits()).unwrap();
    assert_eq!(r.execute_result.unwrap().value, Value::int(30));
}

#[test]
fn unpicklable_values_fall_back_to_replay() {
    let mut s = session();
    s.execute("gen = (i for i in range(3))\nn = 4", &no_limits()).unwrap();
    let snap = s.snapshot().unwrap();
    assert!(snap.requires_replay());
    assert_eq!(snap.unpicklable(), ["gen".to_string()]);
    s.execute("n = 0", &no_limits()).unwrap();
    s.restore(&snap).unwrap();
    let r = s.execute("n, next(gen)", &no_limits()).unwrap();
    assert_eq!(
        r.execute_result.unwrap().value,
        Value::Tuple {
            items: vec![Value::int(4), Value::int(0)]
        }
    );
}

#[test]
fn strict_policy_names_the_variable() {
    let mut s = Session::start(SessionConfig {
        snapshot_policy: SnapshotPolicy::Strict,
        ..SessionConfig::default()
    })
    .unwrap();
    s.execute("gen = (i for i in range(3))", &no_limits()).unwrap();
    let err = s.snapshot().unwrap_err();
    assert!(err.to_string().contains("gen"), "{err}");
}

#[test]
fn sessions_are_isolated() {
    let mut a = session();
    let mut b = session();
    a.execute("shared = 1", &no_limits()).unwrap();
    assert!(!b.variable_names().unwrap().contains("shared"));
}

#[test]
fn describe_compact_and_verbose() {
    let mut s = session();
    assert_eq!(describe_variables(&mut s, DescribeStyle::Compact).unwrap(), "");
    s.execute(
        "import pandas as pd\ntable = pd.DataFrame({'city': ['a', 'b', 'b'], 'score': [1.5, 2.5, 3.5]})",
        &no_limits(),
    )
    .unwrap();
    let compact = describe_variables(&mut s, DescribeStyle::Compact).unwrap();
    assert!(compact.contains("table"));
    assert!(compact.contains("(3, 2)"));
    assert!(compact.contains("city") && compact.contains("score"));
    assert!(!compact.contains("unique"));
    let verbose = describe_variables(&mut s, DescribeStyle::Verbose).unwrap();
    assert!(verbose.contains("city: object, 2 unique values"), "{verbose}");
    assert!(verbose.contains("score: float64, 3 unique values"), "{verbose}");
}

#[test]
fn call_function_with_expression_args() {
    let mut s = session();
    s.execute("import pandas as pd\ndef count_rows(df):\n    return len(df)", &no_limits())
        .unwrap();
    let out = s
        .call_function("count_rows", &[serde_json::json!("`pd.DataFrame({'a': [1, 2]})`")], None, None)
        .unwrap();
    match out {
        CallOutcome::Returned(v) => assert_eq!(v.value, Value::int(2)),
        other => panic!("{other:?}"),
    }
    let bad = s
        .call_function(
            "count_rows",
            &[serde_json::json!("`pd.DataFrame()`")],
            Some("def _validate(df):\n    assert df.shape[0] > 0\n"),
            None,
        )
        .unwrap();
    assert!(matches!(bad, CallOutcome::BadInput(_)));
    assert_eq!(s.call_function("nope", &[], None, None).unwrap(), CallOutcome::Missing);
}

#[test]
fn score_model_with_sklearn() {
    let mut s = session();
    s.execute(
        "from sklearn.linear_model import LogisticRegression\nX = [[0], [1], [2], [3]]\ny = [0, 0, 1, 1]\nclf = LogisticRegression().fit(X, y)",
        &no_limits(),
    )
    .unwrap();
    let score = s.score_model("clf", "X", "y", Some("accuracy"), None).unwrap();
    assert_eq!(score, ScoreOutcome::Score(1.0));
}

#[test]
fn api_trace_resolves_methods_and_indexing() {
    let mut s = session();
    s.execute("import pandas as pd\ndf = pd.DataFrame({'a': [1, 2]})", &no_limits())
        .unwrap();
    let (_, calls) = s.run_with_api_trace("df.head()\ndf['a']").unwrap();
    assert!(calls.contains(&"pandas.DataFrame.head".to_string()), "{calls:?}");
    assert!(calls.contains(&"pandas.DataFrame.__getitem__".to_string()), "{calls:?}");
}

const TWO_PROBLEMS: &str = r#"import pandas as pd

# %%
"""
query: Make a list.
"""
base = [1, 2, 3]

# %%
"""
query: Sum it.
"""
total = sum(base)
total
"#;

#[test]
fn ground_truth_chains_snapshots() {
    let ps = parse_str(TWO_PROBLEMS, "two").unwrap();
    let mut s = session();
    let gt = build_ground_truth(&ps, &mut s).unwrap();
    assert_eq!(gt.steps.len(), 2);
    assert!(gt.steps[1].pre_values.contains_key("base"));
    assert!(gt.steps[0].post.same_as(&gt.steps[1].pre));
    assert_eq!(gt.steps[1].reference_result.execute_result.as_ref().unwrap().value, Value::int(6));
    assert_eq!(gt.steps[1].changed_names(), vec!["total".to_string()]);
}

#[test]
fn ground_truth_of_preamble_only_is_empty() {
    let ps = parse_str("import math\n", "p").unwrap();
    let gt = build_ground_truth(&ps, &mut session()).unwrap();
    assert!(gt.steps.is_empty());
}

#[test]
fn crashing_reference_is_integrity_error() {
    let ps = parse_str("x = 1\n# %%\n\"\"\"\nquery: q\n\"\"\"\ny = missing_name\n", "p").unwrap();
    let err = build_ground_truth(&ps, &mut session()).unwrap_err();
    assert_eq!(err.problem_index(), Some(0));
}

#[test]
fn replay_is_deterministic() {
    let code = ["import numpy as np", "rng = np.random.default_rng(7)", "vals = rng.normal(size=5)", "vals.sum()"];
    let mut outcomes = Vec::new();
    for _ in 0..2 {
        let mut s = session();
        let mut last = None;
        for c in code {
            last = s.execute(c, &no_limits()).unwrap().execute_result;
        }
        outcomes.push((s.values().unwrap(), last));
    }
    assert_eq!(outcomes[0], outcomes[1]);
}
